#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "cautious/vec.hpp"

namespace cautious {

enum class MaskKind {
  DefaultScaled,                 // alpha(x) * ind(u o g > 0), alpha = d/(nnz+xi)
  SoftNegative,                  // 1 where aligned, -c elsewhere
  InnerProduct,                  // all-ones if u^T g >= 0 else all-zeros
  GuaranteedDescentElementwise,  // alpha_k where g_i u_i >= (mu sigma/2) u_i^2
  GuaranteedDescentInner,        // alpha_k everywhere if g^T u >= (alpha_k mu eps_k/2)||u||^2
  Identity,
};

// How DefaultScaled computes alpha. Listing: d/(nnz + xi). Wrapper: the
// mask-mean form 1/(mean(ind) + eps) = d/(nnz + d*eps). The two coincide as
// eps -> xi/d.
enum class ScaleForm { Listing, Wrapper };

struct MaskRule {
  MaskKind kind = MaskKind::DefaultScaled;

  // DefaultScaled
  double xi = 1.0;
  bool strict = true;  // > 0 comparator; false means >= 0
  bool clamp_alpha_min_1 = false;
  ScaleForm scale_form = ScaleForm::Listing;
  double wrapper_eps = 1e-8;

  // SoftNegative
  double soft_c = 0.0;

  // GuaranteedDescent*
  double mu = 0.0;
  double sigma = 0.0;    // elementwise form
  double step_eps = 0.0; // inner form's eps_k
  double alpha_k = 1.0;

  static MaskRule default_scaled(double xi = 1.0, bool strict = true,
                                 bool clamp_alpha_min_1 = false);
  static MaskRule wrapper_scaled(double eps = 1e-8, bool strict = true);
  static MaskRule soft_negative(double c);
  static MaskRule inner_product();
  static MaskRule guaranteed_elementwise(double mu, double sigma, double alpha_k);
  static MaskRule guaranteed_inner(double mu, double eps_k, double alpha_k);
  static MaskRule identity();

  std::string describe() const;
};

struct MaskOutcome {
  Vec weights;                    // per-coordinate multiplier, scale included
  double scale = 1.0;             // alpha
  std::size_t aligned_count = 0;  // nnz of the alignment indicator
  double ratio = 0.0;             // aligned_count / dim
};

// Computes the per-step mask weights for update direction u against gradient
// g. step_size is needed only to validate the elementwise guaranteed-descent
// precondition sigma >= eps*alpha when the mask runs inside an optimizer step.
MaskOutcome apply_mask(const MaskRule& rule, ConstView u, ConstView g,
                       std::optional<double> step_size = std::nullopt);

// fraction of coordinates with u_i * g_i > 0
double mask_ratio(ConstView u, ConstView g);

struct PhiConditionReport {
  bool decrease_ok;  // x^T (1 - phi(x)) <= 0 at this x
  bool monotone_ok;  // x^T phi(x) >= 0 at this x
};

// Evaluates both decrease conditions for rules expressible as a function of
// the alignment product x = u o g (DefaultScaled, SoftNegative, InnerProduct,
// Identity). The threshold masks need u and g separately and are rejected.
PhiConditionReport check_phi_condition(const MaskRule& rule, ConstView x);

// phi(x) for product-expressible rules; used by check_phi_condition and the
// continuous-dynamics rates.
Vec mask_weights_from_product(const MaskRule& rule, ConstView x);

}  // namespace cautious
