#include "cautious/optimizers.hpp"

#include <cmath>
#include <stdexcept>

namespace cautious {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_beta(double b, const char* name) {
  if (!(b >= 0.0 && b < 1.0)) {
    throw std::invalid_argument(std::string("OptimizerConfig: ") + name +
                                " must be in [0, 1)");
  }
}

}  // namespace

OptimizerConfig OptimizerConfig::gd(double lr) {
  OptimizerConfig c;
  c.kind = OptimizerKind::GD;
  c.lr = lr;
  c.validate();
  return c;
}

OptimizerConfig OptimizerConfig::gdm(double lr, double beta) {
  OptimizerConfig c;
  c.kind = OptimizerKind::GDM;
  c.lr = lr;
  c.beta = beta;
  c.validate();
  return c;
}

OptimizerConfig OptimizerConfig::signed_momentum(double lr, double beta) {
  OptimizerConfig c;
  c.kind = OptimizerKind::SignedMomentum;
  c.lr = lr;
  c.beta = beta;
  c.validate();
  return c;
}

OptimizerConfig OptimizerConfig::adamw(double lr, double beta1, double beta2,
                                       double eps, double weight_decay) {
  OptimizerConfig c;
  c.kind = OptimizerKind::AdamW;
  c.lr = lr;
  c.beta1 = beta1;
  c.beta2 = beta2;
  c.eps = eps;
  c.weight_decay = weight_decay;
  c.validate();
  return c;
}

OptimizerConfig OptimizerConfig::lion(double lr, double beta1, double beta2,
                                      double weight_decay) {
  OptimizerConfig c;
  c.kind = OptimizerKind::Lion;
  c.lr = lr;
  c.beta1 = beta1;
  c.beta2 = beta2;
  c.weight_decay = weight_decay;
  c.validate();
  return c;
}

OptimizerConfig OptimizerConfig::cautious(std::optional<MaskRule> rule) const {
  OptimizerConfig c = *this;
  if (rule) {
    c.mask = std::move(rule);
  } else {
    // each listing's comparator: Lion masks on >= 0, everything else on > 0
    c.mask = MaskRule::default_scaled(1.0, kind != OptimizerKind::Lion);
  }
  // the Lion listing applies decay with the unscaled lr
  c.decay_uses_scaled_lr = kind != OptimizerKind::Lion;
  return c;
}

double OptimizerConfig::lr_at(std::int64_t t) const {
  if (!schedule) return lr;
  const auto& s = *schedule;
  if (t <= s.warmup_steps && s.warmup_steps > 0) {
    return lr * static_cast<double>(t) / static_cast<double>(s.warmup_steps);
  }
  const double span =
      static_cast<double>(std::max<std::int64_t>(1, s.total_steps - s.warmup_steps));
  const double progress =
      std::min(1.0, static_cast<double>(t - s.warmup_steps) / span);
  const double floor = lr * s.min_lr_frac;
  return floor + 0.5 * (lr - floor) * (1.0 + std::cos(kPi * progress));
}

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("OptimizerConfig: lr must be > 0");
  switch (kind) {
    case OptimizerKind::GD:
      break;
    case OptimizerKind::GDM:
    case OptimizerKind::SignedMomentum:
      check_beta(beta, "beta");
      break;
    case OptimizerKind::AdamW:
      check_beta(beta1, "beta1");
      check_beta(beta2, "beta2");
      if (!(eps > 0.0)) throw std::invalid_argument("OptimizerConfig: e must be > 0");
      if (weight_decay < 0.0)
        throw std::invalid_argument("OptimizerConfig: weight decay must be >= 0");
      break;
    case OptimizerKind::Lion:
      check_beta(beta1, "beta1");
      check_beta(beta2, "beta2");
      if (weight_decay < 0.0)
        throw std::invalid_argument("OptimizerConfig: weight decay must be >= 0");
      break;
  }
}

std::string OptimizerConfig::describe() const {
  std::string s;
  switch (kind) {
    case OptimizerKind::GD:
      s = "gd(lr=" + std::to_string(lr) + ")";
      break;
    case OptimizerKind::GDM:
      s = "gdm(lr=" + std::to_string(lr) + ",beta=" + std::to_string(beta) + ")";
      break;
    case OptimizerKind::SignedMomentum:
      s = "signed_momentum(lr=" + std::to_string(lr) + ",beta=" + std::to_string(beta) + ")";
      break;
    case OptimizerKind::AdamW:
      s = "adamw(lr=" + std::to_string(lr) + ",b1=" + std::to_string(beta1) +
          ",b2=" + std::to_string(beta2) + ",wd=" + std::to_string(weight_decay) + ")";
      break;
    case OptimizerKind::Lion:
      s = "lion(lr=" + std::to_string(lr) + ",b1=" + std::to_string(beta1) +
          ",b2=" + std::to_string(beta2) + ",wd=" + std::to_string(weight_decay) + ")";
      break;
  }
  if (mask) s += "+mask:" + mask->describe();
  return s;
}

OptimizerState init_state(const OptimizerConfig& config, std::size_t dim) {
  if (dim < 1) throw std::invalid_argument("init_state: dim must be >= 1");
  OptimizerState st;
  st.t = 0;
  switch (config.kind) {
    case OptimizerKind::GD:
      break;
    case OptimizerKind::GDM:
    case OptimizerKind::SignedMomentum:
      st.s = zeros(dim);
      break;
    case OptimizerKind::AdamW:
      st.m = zeros(dim);
      st.v = zeros(dim);
      break;
    case OptimizerKind::Lion:
      st.m = zeros(dim);
      break;
  }
  return st;
}

Vec propose_update(const OptimizerConfig& config, OptimizerState& state,
                   ConstView g) {
  const std::size_t d = g.size();
  state.t += 1;
  switch (config.kind) {
    case OptimizerKind::GD:
      return Vec(g.begin(), g.end());
    case OptimizerKind::GDM: {
      require_same_dim(g, state.s, "propose_update");
      for (std::size_t i = 0; i < d; ++i) state.s[i] = config.beta * state.s[i] + g[i];
      return state.s;
    }
    case OptimizerKind::SignedMomentum: {
      require_same_dim(g, state.s, "propose_update");
      for (std::size_t i = 0; i < d; ++i) {
        state.s[i] = config.beta * state.s[i] + (1.0 - config.beta) * g[i];
      }
      return sign_vec(state.s);
    }
    case OptimizerKind::AdamW: {
      require_same_dim(g, state.m, "propose_update");
      Vec u(d);
      const double b1 = config.beta1;
      const double b2 = config.beta2;
      const bool first = state.t == 1;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
      for (std::size_t i = 0; i < d; ++i) {
        const double m_prev = state.m[i];
        const double v_prev = state.v[i];
        state.m[i] = b1 * m_prev + (1.0 - b1) * g[i];
        state.v[i] = b2 * v_prev + (1.0 - b2) * g[i] * g[i];
        double mhat, vhat;
        if (first) {
          // same correction, rearranged so zero-initialized moments give
          // mhat = g and vhat = g^2 without a rounding round-trip
          mhat = b1 * m_prev / (1.0 - b1) + g[i];
          vhat = b2 * v_prev / (1.0 - b2) + g[i] * g[i];
        } else {
          mhat = state.m[i] / c1;
          vhat = state.v[i] / c2;
        }
        u[i] = mhat / (std::sqrt(vhat) + config.eps);
      }
      return u;
    }
    case OptimizerKind::Lion: {
      require_same_dim(g, state.m, "propose_update");
      Vec u(d);
      for (std::size_t i = 0; i < d; ++i) {
        u[i] = sign(config.beta1 * state.m[i] + (1.0 - config.beta1) * g[i]);
      }
      for (std::size_t i = 0; i < d; ++i) {
        state.m[i] = config.beta2 * state.m[i] + (1.0 - config.beta2) * g[i];
      }
      return u;
    }
  }
  throw std::logic_error("propose_update: unknown optimizer kind");
}

namespace {

bool decays_weights(OptimizerKind kind) {
  return kind == OptimizerKind::AdamW || kind == OptimizerKind::Lion;
}

void fill_losses(StepReport& report, const Objective* objective, ConstView w) {
  if (!objective) return;
  report.loss_before = objective->loss(w);
  report.loss_after = objective->loss(report.w_next);
}

}  // namespace

StepReport cautious_step(const OptimizerConfig& config, OptimizerState& state,
                         ConstView w, ConstView g, const Objective* objective) {
  if (!config.mask) {
    throw std::invalid_argument("cautious_step: config has no mask rule");
  }
  require_same_dim(w, g, "cautious_step");
  StepReport report;
  const double lr = config.lr_at(state.t + 1);
  report.u = propose_update(config, state, g);
  report.mask_outcome = apply_mask(*config.mask, report.u, g, lr);
  const MaskOutcome& mo = *report.mask_outcome;

  report.masked_update = hadamard(mo.weights, report.u);
  report.effective_lr = lr * mo.scale;
  report.w_next.assign(w.begin(), w.end());
  axpy(-lr, report.masked_update, report.w_next);

  if (decays_weights(config.kind) && config.weight_decay > 0.0) {
    const double decay_lr = config.decay_uses_scaled_lr ? report.effective_lr : lr;
    for (auto& x : report.w_next) x -= decay_lr * config.weight_decay * x;
  }
  fill_losses(report, objective, w);
  return report;
}

StepReport base_step(const OptimizerConfig& config, OptimizerState& state,
                     ConstView w, ConstView g, const Objective* objective) {
  require_same_dim(w, g, "base_step");
  StepReport report;
  const double lr = config.lr_at(state.t + 1);
  report.u = propose_update(config, state, g);
  report.masked_update = report.u;
  report.effective_lr = lr;
  report.w_next.assign(w.begin(), w.end());
  axpy(-lr, report.u, report.w_next);
  if (decays_weights(config.kind) && config.weight_decay > 0.0) {
    for (auto& x : report.w_next) x -= lr * config.weight_decay * x;
  }
  fill_losses(report, objective, w);
  return report;
}

double discrete_hamiltonian(const OptimizerConfig& config,
                            const OptimizerState& state, double loss_value) {
  switch (config.kind) {
    case OptimizerKind::GD:
      return loss_value;
    case OptimizerKind::GDM:
      return loss_value + 0.5 * config.lr * norm2_sq(state.s);
    case OptimizerKind::SignedMomentum:
      return loss_value + norm1(state.s);
    case OptimizerKind::AdamW: {
      double kinetic = 0.0;
      for (std::size_t i = 0; i < state.m.size(); ++i) {
        kinetic += state.m[i] * state.m[i] / (std::sqrt(state.v[i]) + config.eps);
      }
      return loss_value + kinetic / (2.0 * (1.0 - config.beta1));
    }
    case OptimizerKind::Lion:
      return (1.0 - config.beta2) * loss_value + norm1(state.m);
  }
  return loss_value;
}

Trajectory run_steps(const OptimizerConfig& config, const Objective& objective,
                     Vec w0, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("run_steps: n_steps must be >= 1");
  if (w0.size() != objective.dim) {
    throw std::invalid_argument("run_steps: w0 does not match objective dim");
  }
  config.validate();

  Trajectory traj;
  traj.points.reserve(static_cast<std::size_t>(n_steps) + 1);
  OptimizerState state = init_state(config, objective.dim);
  Vec w = std::move(w0);

  for (int step = 0; step <= n_steps; ++step) {
    TrajectoryPoint pt;
    pt.w = w;
    pt.loss = objective.loss(w);
    Vec g = objective.grad(w);
    if (!std::isfinite(pt.loss) || !all_finite(g)) {
      traj.abort_step = static_cast<std::size_t>(step);
      traj.abort_reason = "non-finite loss or gradient at step " + std::to_string(step);
      traj.points.push_back(std::move(pt));
      return traj;
    }
    pt.hamiltonian = discrete_hamiltonian(config, state, pt.loss);

    const bool last = step == n_steps;
    // the final point records a dry-run step so its diagnostics are real
    OptimizerState scratch;
    if (last) scratch = state;
    OptimizerState& step_state = last ? scratch : state;
    StepReport report = config.is_cautious()
                            ? cautious_step(config, step_state, w, g)
                            : base_step(config, step_state, w, g);
    pt.mask_ratio = report.mask_outcome ? report.mask_outcome->ratio : 1.0;
    pt.effective_lr = report.effective_lr;
    pt.u = std::move(report.u);
    traj.points.push_back(std::move(pt));
    if (!last) w = std::move(report.w_next);
  }
  return traj;
}

}  // namespace cautious
