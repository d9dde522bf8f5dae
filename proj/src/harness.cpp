#include "cautious/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <thread>

#include "cautious/rng.hpp"

namespace cautious {

void ExperimentConfig::validate() const {
  if (optimizers.empty()) {
    throw std::invalid_argument("ExperimentConfig: no optimizers configured");
  }
  for (const auto& opt : optimizers) opt.validate();
  if (!labels.empty() && labels.size() != optimizers.size()) {
    throw std::invalid_argument("ExperimentConfig: labels do not match optimizers");
  }
  if (n_steps < 0) throw std::invalid_argument("ExperimentConfig: n_steps must be >= 0");
  if (sweep_steps < 10) {
    throw std::invalid_argument("ExperimentConfig: sweep_steps must be >= 10");
  }
  if (grid && (grid->lr_values.empty() || grid->beta_values.empty())) {
    throw std::invalid_argument("ExperimentConfig: sweep grid must be non-empty");
  }
  if (grid) {
    for (double lr : grid->lr_values) {
      if (!(lr > 0.0)) throw std::invalid_argument("ExperimentConfig: grid lr <= 0");
    }
  }
  if (seeds.empty()) throw std::invalid_argument("ExperimentConfig: seeds are empty");
}

Vec ExperimentConfig::start_point(std::size_t dim) const {
  if (!w0.empty()) {
    if (w0.size() != dim) {
      throw std::invalid_argument("ExperimentConfig: w0 does not match problem dim");
    }
    return w0;
  }
  if (w0_preset == "ones") return ones(dim);
  if (w0_preset == "zeros") return zeros(dim);
  throw std::invalid_argument("ExperimentConfig: unknown w0 preset '" + w0_preset + "'");
}

std::string ExperimentConfig::label_of(std::size_t i) const {
  if (i < labels.size() && !labels[i].empty()) return labels[i];
  return "opt" + std::to_string(i) + "_" + optimizers[i].describe();
}

GridSpec default_toy_grid() {
  GridSpec g;
  const int n = 25;
  g.lr_values.resize(n);
  for (int i = 0; i < n; ++i) {
    g.lr_values[i] = std::pow(10.0, -3.0 + 3.0 * static_cast<double>(i) / (n - 1));
  }
  g.beta_values.resize(n);
  for (int i = 0; i < n; ++i) {
    g.beta_values[i] = 0.995 * static_cast<double>(i) / (n - 1);
  }
  // Pin the analytically-known reference cells onto the grid; the stock
  // spacing cannot resolve the critically-damped window, which is only a few
  // percent wide in lr. 2/9 is the heavy-ball optimum at kappa = 4 and 1/3
  // compensates the d/(nnz+1) = 2/3 scale of the masked variant at full
  // alignment.
  auto snap = [](Vec& values, double target) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (std::fabs(values[i] - target) < std::fabs(values[best] - target)) best = i;
    }
    values[best] = target;
  };
  snap(g.lr_values, 2.0 / 9.0);
  snap(g.lr_values, 1.0 / 3.0);
  snap(g.beta_values, 1.0 / 9.0);
  return g;
}

Trajectory run_trajectory(const OptimizerConfig& optimizer,
                          const ExperimentConfig& config, std::uint64_t seed) {
  ProblemSpec spec = config.problem;
  spec.seed = seed;
  const Objective objective = make_problem(spec);
  Trajectory traj = run_steps(optimizer, objective,
                              config.start_point(objective.dim), config.n_steps);
  traj.seed = seed;
  traj.config_fingerprint = config_fingerprint(config);
  return traj;
}

RateEstimate estimate_rate(const Trajectory& trajectory, StepWindow window) {
  RateEstimate est;
  est.window = window;
  if (trajectory.points.empty()) {
    throw std::invalid_argument("estimate_rate: empty trajectory");
  }
  const double l0 = trajectory.points.front().loss;
  const double blowup = 1e6 * std::max(l0, 1e-300);
  for (const auto& pt : trajectory.points) {
    if (!std::isfinite(pt.loss) || pt.loss > blowup) {
      est.diverged = true;
      est.per_step_rate = std::numeric_limits<double>::infinity();
      est.slope = std::numeric_limits<double>::infinity();
      est.r_squared = 0.0;
      return est;
    }
  }
  if (trajectory.abort_step) {
    est.diverged = true;
    est.per_step_rate = std::numeric_limits<double>::infinity();
    est.slope = std::numeric_limits<double>::infinity();
    return est;
  }
  if (window.last >= trajectory.points.size() || window.first > window.last) {
    throw std::invalid_argument("estimate_rate: window outside trajectory");
  }
  const std::size_t n = window.last - window.first + 1;
  if (n < 2) throw std::invalid_argument("estimate_rate: window needs >= 2 points");

  double sum_t = 0.0, sum_y = 0.0;
  for (std::size_t k = window.first; k <= window.last; ++k) {
    const double loss = trajectory.points[k].loss;
    if (!(loss > 0.0)) {
      throw std::invalid_argument("estimate_rate: nonpositive loss at step " +
                                  std::to_string(k));
    }
    sum_t += static_cast<double>(k);
    sum_y += std::log(loss);
  }
  const double mean_t = sum_t / static_cast<double>(n);
  const double mean_y = sum_y / static_cast<double>(n);
  double s_tt = 0.0, s_ty = 0.0, s_yy = 0.0;
  for (std::size_t k = window.first; k <= window.last; ++k) {
    const double dt = static_cast<double>(k) - mean_t;
    const double dy = std::log(trajectory.points[k].loss) - mean_y;
    s_tt += dt * dt;
    s_ty += dt * dy;
    s_yy += dy * dy;
  }
  est.slope = s_ty / s_tt;
  est.per_step_rate = std::exp(0.5 * est.slope);
  est.r_squared =
      s_yy > 0.0 ? std::clamp((s_ty * s_ty) / (s_tt * s_yy), 0.0, 1.0) : 1.0;
  return est;
}

StepWindow default_rate_window(const Trajectory& trajectory) {
  const std::size_t t = trajectory.n_steps();
  // keep the regression clear of underflowed or vanished losses
  const double floor = 1e-250 * std::max(trajectory.points.front().loss, 1.0);
  std::size_t limit = t;
  for (std::size_t k = 0; k <= t; ++k) {
    if (!(trajectory.points[k].loss > floor)) {
      limit = k == 0 ? 0 : k - 1;
      break;
    }
  }
  StepWindow w;
  w.last = std::max<std::size_t>(limit, 1);
  w.first = limit / 10;
  return w;
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  int pool = workers > 0 ? workers
                         : static_cast<int>(std::thread::hardware_concurrency());
  if (pool < 1) pool = 1;
  pool = std::min<std::size_t>(pool, n);
  if (pool == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  threads.reserve(static_cast<std::size_t>(pool));
  for (int w = 0; w < pool; ++w) {
    threads.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

std::vector<SweepResult> sweep_grid(const ExperimentConfig& config) {
  config.validate();
  if (!config.grid) {
    throw std::invalid_argument("sweep_grid: config has no grid");
  }
  const GridSpec& grid = *config.grid;
  const std::size_t n_lr = grid.lr_values.size();
  const std::size_t n_beta = grid.beta_values.size();
  const std::uint64_t seed = config.seeds.front();

  std::vector<SweepResult> results(config.optimizers.size());
  for (std::size_t oi = 0; oi < config.optimizers.size(); ++oi) {
    SweepResult& res = results[oi];
    res.label = config.label_of(oi);
    res.grid = grid;
    res.cells.resize(n_lr * n_beta);

    ExperimentConfig cell_config = config;
    cell_config.n_steps = config.sweep_steps;

    parallel_for(n_lr * n_beta, config.workers, [&](std::size_t cell) {
      const std::size_t li = cell / n_beta;
      const std::size_t bi = cell % n_beta;
      OptimizerConfig opt = config.optimizers[oi];
      opt.lr = grid.lr_values[li];
      switch (opt.kind) {
        case OptimizerKind::GDM:
        case OptimizerKind::SignedMomentum:
          opt.beta = grid.beta_values[bi];
          break;
        case OptimizerKind::AdamW:
        case OptimizerKind::Lion:
          opt.beta1 = grid.beta_values[bi];
          break;
        case OptimizerKind::GD:
          break;
      }
      const Trajectory traj = run_trajectory(opt, cell_config, seed);
      res.cells[cell] = estimate_rate(traj, default_rate_window(traj));
    });

    res.best_rate = std::numeric_limits<double>::infinity();
    for (std::size_t cell = 0; cell < res.cells.size(); ++cell) {
      const double rate = res.cells[cell].per_step_rate;
      if (rate < res.best_rate) {
        res.best_rate = rate;
        res.best_lr_index = cell / n_beta;
        res.best_beta_index = cell % n_beta;
      }
    }
  }
  return results;
}

PhiAblationReport ablate_phi(const ExperimentConfig& config) {
  ExperimentConfig base = config;
  if (!base.grid) base.grid = default_toy_grid();

  const OptimizerConfig gdm = OptimizerConfig::gdm(0.01, 0.99);
  base.optimizers = {
      gdm,
      gdm.cautious(),
      gdm.cautious(MaskRule::soft_negative(0.01)),
      gdm.cautious(MaskRule::soft_negative(0.1)),
      gdm.cautious(MaskRule::inner_product()),
      gdm.cautious(MaskRule::identity()),
  };
  base.labels = {"gdm", "c-gdm", "phi_c0.01", "phi_c0.1", "phi_inner", "identity"};

  PhiAblationReport report;
  if (config.problem.kind == ProblemKind::ToyQuadratic) {
    const double sk = std::sqrt(config.problem.kappa);
    report.gdm_reference_rate = (sk - 1.0) / (sk + 1.0);
  }
  auto sweeps = sweep_grid(base);
  for (std::size_t i = 0; i < sweeps.size(); ++i) {
    PhiAblationRow row;
    row.label = base.labels[i];
    row.sweep = std::move(sweeps[i]);

    OptimizerConfig best = base.optimizers[i];
    best.lr = row.sweep.grid.lr_values[row.sweep.best_lr_index];
    const double beta = row.sweep.grid.beta_values[row.sweep.best_beta_index];
    if (best.kind == OptimizerKind::GDM || best.kind == OptimizerKind::SignedMomentum) {
      best.beta = beta;
    } else {
      best.beta1 = beta;
    }
    ExperimentConfig curve_config = base;
    curve_config.n_steps = base.sweep_steps;
    row.best_curve = run_trajectory(best, curve_config, base.seeds.front());
    report.rows.push_back(std::move(row));
  }
  return report;
}

TrainReport train_benchmark(const ExperimentConfig& config) {
  config.validate();
  if (config.optimizers.size() != 2) {
    throw std::invalid_argument(
        "train_benchmark: expects exactly [base, cautious] optimizer configs");
  }
  const OptimizerConfig& base = config.optimizers[0];
  const OptimizerConfig& cautious = config.optimizers[1];
  if (base.is_cautious() || !cautious.is_cautious()) {
    throw std::invalid_argument(
        "train_benchmark: first config must be base, second cautious");
  }

  TrainReport report;
  report.note =
      "trend report - not an acceptance gate; paired seeds, shared "
      "hyperparameters";

  std::vector<TrainSeedRow> rows(config.seeds.size());
  parallel_for(config.seeds.size(), config.workers, [&](std::size_t si) {
    const std::uint64_t seed = config.seeds[si];
    ProblemSpec spec = config.problem;
    spec.seed = seed;
    const Objective objective = make_problem(spec);
    Rng rng(seed * 0x06c45d9f9d2a5b1bULL + 0x2d358dccaa6c78a5ULL);
    const Vec w0 = config.w0.empty() ? rng.normal_vec(objective.dim)
                                     : config.start_point(objective.dim);

    TrainSeedRow row;
    row.seed = seed;
    if (config.n_steps == 0) {  // report of initial losses only
      row.initial_loss = objective.loss(w0);
      row.final_loss_base = row.initial_loss;
      row.final_loss_cautious = row.initial_loss;
      const double opt0 = objective.optimum_value.value_or(0.0);
      row.target = opt0 + 0.1 * (row.initial_loss - opt0);
      rows[si] = row;
      return;
    }
    const Trajectory tb = run_steps(base, objective, w0, config.n_steps);
    const Trajectory tc = run_steps(cautious, objective, w0, config.n_steps);

    row.initial_loss = tb.points.front().loss;
    row.final_loss_base = tb.final_loss();
    row.final_loss_cautious = tc.final_loss();
    const double optimum = objective.optimum_value.value_or(0.0);
    row.target = optimum + 0.1 * (row.initial_loss - optimum);
    auto steps_to = [&](const Trajectory& t) -> std::int64_t {
      for (std::size_t k = 0; k < t.points.size(); ++k) {
        if (t.points[k].loss <= row.target) return static_cast<std::int64_t>(k);
      }
      return -1;
    };
    row.steps_to_target_base = steps_to(tb);
    row.steps_to_target_cautious = steps_to(tc);
    double ratio_sum = 0.0;
    for (const auto& pt : tc.points) ratio_sum += pt.mask_ratio;
    row.mean_mask_ratio = ratio_sum / static_cast<double>(tc.points.size());
    rows[si] = row;
  });

  double target_sum = 0.0;
  for (const auto& row : rows) {
    if (row.final_loss_cautious < row.final_loss_base) {
      ++report.cautious_wins;
    } else if (row.final_loss_base < row.final_loss_cautious) {
      ++report.base_wins;
    } else {
      ++report.ties;
    }
    if (std::fabs(row.final_loss_cautious - row.final_loss_base) <=
        1e-6 * (1.0 + std::fabs(row.final_loss_base))) {
      ++report.final_matches;
    }
    const bool both_reached =
        row.steps_to_target_base >= 0 && row.steps_to_target_cautious >= 0;
    if (both_reached && row.steps_to_target_cautious < row.steps_to_target_base) {
      ++report.cautious_faster;
    } else if (both_reached &&
               row.steps_to_target_base < row.steps_to_target_cautious) {
      ++report.base_faster;
    }
    target_sum += row.target;
  }
  report.loss_target = target_sum / static_cast<double>(rows.size());
  report.rows = std::move(rows);
  return report;
}

}  // namespace cautious
