#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cautious/masks.hpp"
#include "cautious/problems.hpp"
#include "cautious/trajectory.hpp"
#include "cautious/vec.hpp"

namespace cautious {

enum class OptimizerKind { GD, GDM, SignedMomentum, AdamW, Lion };

// Optional linear-warmup + cosine decay schedule (training benchmark only;
// everything else uses the constant lr).
struct CosineSchedule {
  int warmup_steps = 0;
  int total_steps = 1;
  double min_lr_frac = 0.1;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::GD;
  double lr = 0.01;          // epsilon
  double beta = 0.9;         // GDM / SignedMomentum momentum coefficient
  double beta1 = 0.9;        // AdamW / Lion
  double beta2 = 0.99;       // AdamW / Lion
  double eps = 1e-8;         // AdamW denominator e
  double weight_decay = 0.0; // gamma, AdamW / Lion only
  std::optional<MaskRule> mask;
  // AdamW-listing decay uses the mask-scaled lr at the post-update point;
  // the Lion listing keeps the plain lr. false restores conventional
  // decoupled decay with the unscaled lr.
  bool decay_uses_scaled_lr = true;
  std::optional<CosineSchedule> schedule;

  static OptimizerConfig gd(double lr);
  static OptimizerConfig gdm(double lr, double beta);
  static OptimizerConfig signed_momentum(double lr, double beta);
  static OptimizerConfig adamw(double lr, double beta1 = 0.9, double beta2 = 0.99,
                               double eps = 1e-8, double weight_decay = 0.0);
  static OptimizerConfig lion(double lr, double beta1 = 0.9, double beta2 = 0.99,
                              double weight_decay = 0.0);

  // Cautious variants with each listing's comparator and decay-lr choice.
  OptimizerConfig cautious(std::optional<MaskRule> rule = std::nullopt) const;

  double lr_at(std::int64_t t) const;  // one-based step index
  void validate() const;
  std::string describe() const;
  bool is_cautious() const { return mask.has_value(); }
};

struct OptimizerState {
  std::int64_t t = 0;
  Vec m;  // first moment (AdamW, Lion)
  Vec v;  // second moment (AdamW)
  Vec s;  // generic momentum (GDM, SignedMomentum)
};

struct StepReport {
  Vec u;              // proposed negative update direction
  Vec masked_update;  // weights o u (equals u for base steps)
  double effective_lr = 0.0;
  std::optional<MaskOutcome> mask_outcome;
  Vec w_next;
  std::optional<double> loss_before;
  std::optional<double> loss_after;
};

OptimizerState init_state(const OptimizerConfig& config, std::size_t dim);

// Advances t and the moment vectors, returns the negative update direction
// u_t. Weight decay is not part of u; the step operations apply it.
Vec propose_update(const OptimizerConfig& config, OptimizerState& state,
                   ConstView g);

// One masked step: w' = w - lr * (weights o u), then decoupled weight decay.
StepReport cautious_step(const OptimizerConfig& config, OptimizerState& state,
                         ConstView w, ConstView g,
                         const Objective* objective = nullptr);

// One unmasked step: w' = w - lr * u, then decoupled weight decay.
StepReport base_step(const OptimizerConfig& config, OptimizerState& state,
                     ConstView w, ConstView g,
                     const Objective* objective = nullptr);

// Lyapunov diagnostic recorded along discrete runs, matching each variant's
// continuous-time energy: GD L; GDM L + (lr/2)||s||^2; signed momentum
// L + ||s||_1; AdamW L + <m/(sqrt(v)+e), m>/(2(1-beta1)); Lion
// (1-beta2) L + ||m||_1.
double discrete_hamiltonian(const OptimizerConfig& config,
                            const OptimizerState& state, double loss_value);

// Runs n_steps from w0, recording loss, Hamiltonian, mask ratio and the
// proposed update at every point. Non-finite loss or gradient aborts the run
// and records the offending step index.
Trajectory run_steps(const OptimizerConfig& config, const Objective& objective,
                     Vec w0, int n_steps);

}  // namespace cautious
