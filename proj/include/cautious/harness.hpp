#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cautious/optimizers.hpp"
#include "cautious/problems.hpp"
#include "cautious/trajectory.hpp"
#include "cautious/vec.hpp"

namespace cautious {

// Inclusive range of trajectory point indices used for rate regression.
struct StepWindow {
  std::size_t first = 0;
  std::size_t last = 0;
};

struct RateEstimate {
  double slope = 0.0;          // OLS slope of ln L_t vs t
  double r_squared = 0.0;
  double per_step_rate = 1.0;  // exp(slope/2); iterate contraction factor
  StepWindow window;
  bool diverged = false;       // any L_t > 1e6 * L_0; rate reported as +inf
};

struct GridSpec {
  Vec lr_values;
  Vec beta_values;
};

struct OutputOptions {
  std::string dir = "out";
  bool csv = true;
  bool json = true;
  bool svg = false;
};

struct ExperimentConfig {
  ProblemSpec problem = ProblemSpec::toy_quadratic();
  std::vector<OptimizerConfig> optimizers;
  std::vector<std::string> labels;  // parallel to optimizers; generated if empty
  Vec w0;                           // explicit start; empty = use preset
  std::string w0_preset = "ones";   // "ones" | "zeros"
  int n_steps = 10000;
  std::vector<std::uint64_t> seeds{0};
  std::optional<GridSpec> grid;
  int sweep_steps = 300;            // trajectory length per sweep cell
  OutputOptions outputs;
  int workers = 0;                  // 0 = hardware concurrency

  void validate() const;
  Vec start_point(std::size_t dim) const;
  std::string label_of(std::size_t i) const;
};

// Fig. 8-style default grid on the toy problem: 25 log-spaced lr in [1e-3, 1]
// and 25 linear beta in [0, 0.995], with the points closest to the analytic
// GDM optimum (2/9, 1/9) replaced by the exact optimum so the reference rate
// is resolvable.
GridSpec default_toy_grid();

// 64-bit FNV-1a over the canonical JSON form of the config, as 16 hex chars.
std::string config_fingerprint(const ExperimentConfig& config);

// Deterministic single run of one optimizer; the seed re-parameterizes
// data-backed problems and is recorded in the trajectory.
Trajectory run_trajectory(const OptimizerConfig& optimizer,
                          const ExperimentConfig& config, std::uint64_t seed);

// OLS of ln L_t on t over the window (inclusive point indices).
RateEstimate estimate_rate(const Trajectory& trajectory, StepWindow window);

// Default regression window [0.1 T, T], truncated before underflowed or
// nonpositive losses.
StepWindow default_rate_window(const Trajectory& trajectory);

struct SweepResult {
  std::string label;
  GridSpec grid;
  std::vector<RateEstimate> cells;  // row-major: [lr_index * n_beta + beta_index]
  double best_rate = 0.0;
  std::size_t best_lr_index = 0;
  std::size_t best_beta_index = 0;

  const RateEstimate& cell(std::size_t lr_i, std::size_t beta_i) const {
    return cells[lr_i * grid.beta_values.size() + beta_i];
  }
};

// One trajectory + rate per (lr, beta) cell per optimizer, dispatched to a
// bounded worker pool; results are keyed by cell index so the worker count
// cannot change them.
std::vector<SweepResult> sweep_grid(const ExperimentConfig& config);

struct PhiAblationRow {
  std::string label;
  SweepResult sweep;
  Trajectory best_curve;  // run at the best grid cell
};

struct PhiAblationReport {
  std::vector<PhiAblationRow> rows;
  double gdm_reference_rate = 0.0;  // (sqrt(kappa)-1)/(sqrt(kappa)+1)
};

// Grid ablation over the mask family: base GDM, the scaled default mask,
// soft-negative c in {0.01, 0.1}, the inner-product mask, and the identity
// reduction.
PhiAblationReport ablate_phi(const ExperimentConfig& config);

struct TrainSeedRow {
  std::uint64_t seed = 0;
  double initial_loss = 0.0;
  double target = 0.0;  // optimum + 10% of the initial excess
  double final_loss_base = 0.0;
  double final_loss_cautious = 0.0;
  std::int64_t steps_to_target_base = -1;      // -1 = target not reached
  std::int64_t steps_to_target_cautious = -1;
  double mean_mask_ratio = 1.0;  // cautious run's mean alignment ratio
};

struct TrainReport {
  std::vector<TrainSeedRow> rows;
  double loss_target = 0.0;  // mean of the per-seed targets
  int cautious_wins = 0;     // strictly lower final loss
  int base_wins = 0;
  int ties = 0;
  int final_matches = 0;     // final losses within 1e-6 relative
  int cautious_faster = 0;   // reached the target in fewer steps
  int base_faster = 0;
  std::string note;  // trend-only disclaimer
};

// Paired base-vs-cautious comparison over seeds; a trend report, not an
// acceptance gate.
TrainReport train_benchmark(const ExperimentConfig& config);

// Runs fn(0..n-1) on a bounded pool; each task writes only its own slot.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace cautious
