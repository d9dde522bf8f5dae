#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cautious/masks.hpp"
#include "cautious/optimizers.hpp"
#include "cautious/problems.hpp"
#include "cautious/trajectory.hpp"
#include "cautious/vec.hpp"

namespace cautious {

// Result of one executable theorem check. margin is the slack of the checked
// inequality, signed so that margin >= -tol means pass.
struct Verdict {
  bool passed = false;
  double margin = 0.0;
  std::map<std::string, std::string> context;
};

inline double verdict_tol(double scale) { return 1e-12 * (1.0 + std::fabs(scale)); }

// Single-step dominance bound:
//   eps <= 2 Delta(u o g) / (mu ||r|| (2||u|| + ||r||)),
// with r = u o (1 - weights) and Delta(x) = -x^T (1 - phi(x)).
// Returns +inf when r = 0. Throws when Delta < 0 (the mask does not satisfy
// the dominance precondition at this point).
double step_size_bound(ConstView u, ConstView g, ConstView mask_weights, double mu);

// One base step vs one cautious step from identical (w, state);
// passes iff loss(cautious w') <= loss(base w') + tol.
Verdict check_single_step(const Objective& objective, ConstView w,
                          const OptimizerState& state, const OptimizerConfig& config,
                          double step_size);

// Inner-product mask on a convex objective: dominance at any step size.
Verdict check_inner_product_any_step(const Objective& objective, ConstView w,
                                     const OptimizerState& state,
                                     const OptimizerConfig& config, double step_size);

// Threshold masks: the cautious iterate itself descends,
// loss(w') <= loss(w) + tol.
Verdict check_guaranteed_descent(const Objective& objective, ConstView w,
                                 const OptimizerState& state,
                                 const OptimizerConfig& config);

// Averaged alignment bound over a recorded cautious trajectory:
//   (1/T) sum_t ||grad L(w_t) o u_t||_phi
//     <= (L(w_1) - L*) / (T eps) + (mu eps / 2T) B_T,
// with B_T = sum_t ||u_t||^2 and ||x||_phi = x^T phi(x).
Verdict check_convergence_bound(const Trajectory& trajectory,
                                const Objective& objective, double step_size,
                                const MaskRule& mask_rule);

// Identity-mask cautious trajectory must be bitwise-equal to the base run.
Verdict check_reduction(const OptimizerConfig& config, const Objective& objective,
                        Vec w0, int n_steps);

}  // namespace cautious
