#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cautious/harness.hpp"
#include "cautious/io.hpp"
#include "cautious/rng.hpp"

using namespace cautious;

namespace {

Trajectory synthetic_losses(const Vec& losses) {
  Trajectory t;
  for (double l : losses) {
    TrajectoryPoint pt;
    pt.w = {0.0};
    pt.loss = l;
    t.points.push_back(pt);
  }
  return t;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ExperimentConfig toy_config() {
  ExperimentConfig cfg;
  cfg.problem = ProblemSpec::toy_quadratic(4.0);
  const OptimizerConfig gdm = OptimizerConfig::gdm(0.01, 0.99);
  cfg.optimizers = {gdm, gdm.cautious()};
  cfg.labels = {"gdm", "c-gdm"};
  cfg.n_steps = 50;
  return cfg;
}

}  // namespace

TEST_CASE("rate estimation is exact on a geometric sequence") {
  Vec losses(51);
  for (int k = 0; k <= 50; ++k) losses[k] = 5.0 * std::pow(1.0 / 9.0, k);
  const Trajectory t = synthetic_losses(losses);
  const RateEstimate est = estimate_rate(t, StepWindow{0, 50});
  CHECK(std::fabs(est.slope - std::log(1.0 / 9.0)) < 1e-10);
  CHECK(est.per_step_rate == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(est.r_squared > 1.0 - 1e-12);
}

TEST_CASE("rate estimation on constant losses") {
  const Trajectory t = synthetic_losses(Vec(20, 2.5));
  const RateEstimate est = estimate_rate(t, StepWindow{0, 19});
  CHECK(est.slope == 0.0);
  CHECK(est.per_step_rate == 1.0);
}

TEST_CASE("rate estimation rejects nonpositive windowed losses") {
  Vec losses{1.0, 0.5, 0.0, 0.1};
  const Trajectory t = synthetic_losses(losses);
  try {
    estimate_rate(t, StepWindow{0, 3});
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("step 2") != std::string::npos);
  }
}

TEST_CASE("divergent runs report the +inf sentinel") {
  Vec losses;
  for (int k = 0; k < 30; ++k) losses.push_back(5.0 * std::pow(2.0, k));
  const Trajectory t = synthetic_losses(losses);
  const RateEstimate est = estimate_rate(t, StepWindow{0, 29});
  CHECK(est.diverged);
  CHECK(std::isinf(est.per_step_rate));
  CHECK(est.per_step_rate > 1.0);
}

TEST_CASE("gdm at its analytic optimum contracts at rate 1/3") {
  ExperimentConfig cfg = toy_config();
  cfg.n_steps = 400;
  const OptimizerConfig gdm = OptimizerConfig::gdm(2.0 / 9.0, 1.0 / 9.0);
  const Trajectory traj = run_trajectory(gdm, cfg, 0);
  const RateEstimate est = estimate_rate(traj, default_rate_window(traj));
  CHECK(est.per_step_rate == doctest::Approx(1.0 / 3.0).epsilon(0.06));
  CHECK(std::fabs(est.per_step_rate - 1.0 / 3.0) < 0.02);
}

namespace {

// closed-form contraction factor of one heavy-ball eigenmode:
// z^2 - (1 + beta - lr*lambda) z + beta = 0
double mode_radius(double lr, double beta, double lambda) {
  const double b = 1.0 + beta - lr * lambda;
  const double disc = b * b - 4.0 * beta;
  if (disc < 0.0) return std::sqrt(beta);
  const double root = std::sqrt(disc);
  return std::max(std::fabs(0.5 * (b + root)), std::fabs(0.5 * (b - root)));
}

double heavy_ball_radius(double lr, double beta) {
  return std::max(mode_radius(lr, beta, 8.0), mode_radius(lr, beta, 2.0));
}

}  // namespace

TEST_CASE("measured gdm rates match the spectral radius oracle") {
  ExperimentConfig cfg = toy_config();
  cfg.n_steps = 400;
  for (const auto& [lr, beta] : {std::pair{0.1, 0.5},
                                 std::pair{0.05, 0.3},
                                 std::pair{0.02, 0.8},
                                 std::pair{2.0 / 9.0, 0.2}}) {
    const double expected = heavy_ball_radius(lr, beta);
    REQUIRE(expected < 1.0);
    const Trajectory traj =
        run_trajectory(OptimizerConfig::gdm(lr, beta), cfg, 0);
    const RateEstimate est = estimate_rate(traj, default_rate_window(traj));
    CHECK(est.per_step_rate == doctest::Approx(expected).epsilon(0.03));
  }
}

TEST_CASE("default toy grid pins the analytic optimum") {
  const GridSpec grid = default_toy_grid();
  REQUIRE(grid.lr_values.size() == 25);
  REQUIRE(grid.beta_values.size() == 25);
  bool has_lr = false, has_beta = false;
  for (double lr : grid.lr_values) has_lr = has_lr || lr == 2.0 / 9.0;
  for (double beta : grid.beta_values) has_beta = has_beta || beta == 1.0 / 9.0;
  CHECK(has_lr);
  CHECK(has_beta);
  CHECK(grid.lr_values.front() == doctest::Approx(1e-3));
  CHECK(grid.lr_values.back() == doctest::Approx(1.0));
  CHECK(grid.beta_values.front() == 0.0);
  CHECK(grid.beta_values.back() == doctest::Approx(0.995));
}

TEST_CASE("sweep results are identical across worker counts") {
  ExperimentConfig cfg = toy_config();
  cfg.optimizers = {OptimizerConfig::gdm(0.01, 0.9)};
  cfg.labels = {"gdm"};
  GridSpec grid;
  grid.lr_values = {0.01, 0.1, 2.0 / 9.0, 1.0};
  grid.beta_values = {0.0, 1.0 / 9.0, 0.9, 0.99};
  cfg.grid = grid;
  cfg.sweep_steps = 200;

  cfg.workers = 1;
  const auto a = sweep_grid(cfg);
  cfg.workers = 3;
  const auto b = sweep_grid(cfg);
  REQUIRE(a.size() == 1);
  REQUIRE(a[0].cells.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(a[0].cells[i].per_step_rate == b[0].cells[i].per_step_rate);
    CHECK(a[0].cells[i].slope == b[0].cells[i].slope);
  }
  // lr = 1 with high beta must diverge on the toy problem
  const RateEstimate& hot = a[0].cell(3, 3);
  CHECK(hot.diverged);
  CHECK(std::isinf(hot.per_step_rate));
}

TEST_CASE("trajectory csv schema is exact") {
  const ExperimentConfig cfg = toy_config();
  Trajectory traj = run_trajectory(cfg.optimizers[0], cfg, 0);
  traj.points.resize(4);  // 3-step trajectory: 4 data rows
  const std::string csv = trajectory_csv(traj);
  CHECK(csv.rfind("step,loss,hamiltonian,mask_ratio,effective_lr,w0,w1\n", 0) == 0);
  int newlines = 0;
  for (char c : csv) newlines += c == '\n';
  CHECK(newlines == 5);  // header + 4 rows
}

TEST_CASE("heatmap csv serializes divergent cells as inf") {
  SweepResult sweep;
  sweep.label = "x";
  sweep.grid.lr_values = {0.1, 1.0};
  sweep.grid.beta_values = {0.0, 0.5};
  sweep.cells.resize(4);
  sweep.cells[3].diverged = true;
  sweep.cells[3].per_step_rate = std::numeric_limits<double>::infinity();
  sweep.cells[0].per_step_rate = 0.5;
  const std::string csv = heatmap_csv(sweep);
  CHECK(csv.find("inf") != std::string::npos);
  CHECK(csv.rfind("lr\\beta,0,0.5", 0) == 0);
}

TEST_CASE("emitted files are byte-identical across runs and worker counts") {
  ExperimentConfig cfg = toy_config();
  cfg.optimizers = {OptimizerConfig::gdm(0.01, 0.9).cautious()};
  cfg.labels = {"c-gdm"};
  GridSpec grid;
  grid.lr_values = {0.05, 0.15};
  grid.beta_values = {0.5, 0.9};
  cfg.grid = grid;
  cfg.sweep_steps = 100;

  cfg.workers = 1;
  cfg.outputs.dir = "test_out_a";
  const auto files_a = emit_sweep_outputs(sweep_grid(cfg), cfg, cfg.outputs);
  cfg.workers = 2;
  cfg.outputs.dir = "test_out_b";
  OutputOptions out_b = cfg.outputs;
  const auto files_b = emit_sweep_outputs(sweep_grid(cfg), cfg, out_b);
  REQUIRE(files_a.size() == files_b.size());
  for (std::size_t i = 0; i < files_a.size(); ++i) {
    CHECK(slurp(files_a[i]) == slurp(files_b[i]));
  }
  std::filesystem::remove_all("test_out_a");
  std::filesystem::remove_all("test_out_b");
}

TEST_CASE("config json roundtrip preserves the fingerprint") {
  ExperimentConfig cfg = toy_config();
  cfg.grid = default_toy_grid();
  cfg.seeds = {3, 4};
  const nlohmann::json j = to_json(cfg);
  const ExperimentConfig back = experiment_from_json(j);
  CHECK(config_fingerprint(cfg) == config_fingerprint(back));
  CHECK(back.optimizers.size() == 2);
  CHECK(back.optimizers[1].is_cautious());
  CHECK(back.optimizers[1].mask->kind == MaskKind::DefaultScaled);

  ExperimentConfig other = cfg;
  other.n_steps += 1;
  CHECK(config_fingerprint(cfg) != config_fingerprint(other));
}

TEST_CASE("every problem kind survives a json roundtrip") {
  const std::vector<ProblemSpec> specs{
      ProblemSpec::toy_quadratic(3.5),
      ProblemSpec::separable_quadratic({1.0, -2.0, 0.5}),
      ProblemSpec::random_smooth_quadratic(7, 2.5, 11),
      ProblemSpec::rosenbrock(4),
      ProblemSpec::logistic(32, 4, 9),
  };
  for (const auto& spec : specs) {
    const ProblemSpec back = problem_from_json(to_json(spec));
    CHECK(back.kind == spec.kind);
    CHECK(to_json(back).dump() == to_json(spec).dump());
    const Objective a = make_problem(spec);
    const Objective b = make_problem(back);
    const Vec w = Rng(2).normal_vec(a.dim);
    CHECK(a.loss(w) == b.loss(w));
  }
}

TEST_CASE("every optimizer kind survives a json roundtrip") {
  const std::vector<OptimizerConfig> configs{
      OptimizerConfig::gd(0.02),
      OptimizerConfig::gdm(0.01, 0.85),
      OptimizerConfig::signed_momentum(0.005, 0.7),
      OptimizerConfig::adamw(0.01, 0.9, 0.95, 1e-7, 0.05),
      OptimizerConfig::lion(0.001, 0.9, 0.99, 0.1),
      OptimizerConfig::gdm(0.01, 0.9).cautious(MaskRule::wrapper_scaled(1e-6)),
      OptimizerConfig::lion(0.001).cautious(),
      OptimizerConfig::gdm(0.01, 0.9).cautious(
          MaskRule::guaranteed_elementwise(2.0, 0.5, 1.5)),
  };
  for (const auto& cfg : configs) {
    const OptimizerConfig back = optimizer_from_json(to_json(cfg));
    CHECK(to_json(back).dump() == to_json(cfg).dump());
  }
}

TEST_CASE("optimizer json roundtrip keeps mask parameters") {
  OptimizerConfig cfg = OptimizerConfig::adamw(0.01, 0.9, 0.95, 1e-6, 0.1)
                            .cautious(MaskRule::soft_negative(0.25));
  const OptimizerConfig back = optimizer_from_json(to_json(cfg));
  CHECK(back.kind == OptimizerKind::AdamW);
  CHECK(back.lr == cfg.lr);
  CHECK(back.beta2 == cfg.beta2);
  CHECK(back.mask->kind == MaskKind::SoftNegative);
  CHECK(back.mask->soft_c == 0.25);
  CHECK(back.weight_decay == 0.1);
}

TEST_CASE("phi ablation includes an exact identity reduction") {
  ExperimentConfig cfg = toy_config();
  GridSpec grid;  // small grid keeps the unit test quick
  grid.lr_values = {0.05, 0.1, 2.0 / 9.0};
  grid.beta_values = {0.0, 1.0 / 9.0, 0.9};
  cfg.grid = grid;
  cfg.sweep_steps = 150;
  const PhiAblationReport report = ablate_phi(cfg);
  REQUIRE(report.rows.size() == 6);
  CHECK(report.gdm_reference_rate == doctest::Approx(1.0 / 3.0));

  const SweepResult* gdm = nullptr;
  const SweepResult* identity = nullptr;
  for (const auto& row : report.rows) {
    if (row.label == "gdm") gdm = &row.sweep;
    if (row.label == "identity") identity = &row.sweep;
  }
  REQUIRE(gdm != nullptr);
  REQUIRE(identity != nullptr);
  for (std::size_t i = 0; i < gdm->cells.size(); ++i) {
    CHECK(gdm->cells[i].per_step_rate == identity->cells[i].per_step_rate);
  }
}

TEST_CASE("train benchmark with an identity mask is a wash") {
  ExperimentConfig cfg;
  cfg.problem = ProblemSpec::logistic(64, 8, 0);
  const OptimizerConfig adamw = OptimizerConfig::adamw(0.05);
  cfg.optimizers = {adamw, adamw.cautious(MaskRule::identity())};
  cfg.n_steps = 200;
  cfg.seeds = {0, 1, 2};
  const TrainReport report = train_benchmark(cfg);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK(row.final_loss_base == row.final_loss_cautious);
    CHECK(row.steps_to_target_base == row.steps_to_target_cautious);
  }
  CHECK(report.cautious_wins == 0);
  CHECK(report.base_wins == 0);
  CHECK(report.ties == 3);
  CHECK(report.note.find("not an acceptance gate") != std::string::npos);
}

TEST_CASE("zero-step train benchmark reports initial losses") {
  ExperimentConfig cfg;
  cfg.problem = ProblemSpec::logistic(32, 4, 0);
  const OptimizerConfig adamw = OptimizerConfig::adamw(0.05);
  cfg.optimizers = {adamw, adamw.cautious()};
  cfg.n_steps = 0;
  cfg.seeds = {0};
  const TrainReport report = train_benchmark(cfg);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].final_loss_base == report.rows[0].initial_loss);
  CHECK(report.rows[0].final_loss_cautious == report.rows[0].initial_loss);
}

TEST_CASE("parallel_for propagates worker exceptions") {
  CHECK_THROWS_AS(parallel_for(16, 4,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("invalid configs are rejected") {
  ExperimentConfig cfg = toy_config();
  cfg.optimizers.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  ExperimentConfig cfg2 = toy_config();
  cfg2.grid = GridSpec{};  // empty grid
  CHECK_THROWS_AS(cfg2.validate(), std::invalid_argument);

  ExperimentConfig cfg3 = toy_config();
  cfg3.w0 = {1.0, 2.0, 3.0};  // dim mismatch against the toy problem
  CHECK_THROWS_AS(run_trajectory(cfg3.optimizers[0], cfg3, 0), std::invalid_argument);
}
