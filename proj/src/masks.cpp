#include "cautious/masks.hpp"

#include <cmath>
#include <stdexcept>

namespace cautious {

MaskRule MaskRule::default_scaled(double xi, bool strict, bool clamp_alpha_min_1) {
  if (!(xi > 0.0)) throw std::invalid_argument("MaskRule: xi must be > 0");
  MaskRule r;
  r.kind = MaskKind::DefaultScaled;
  r.xi = xi;
  r.strict = strict;
  r.clamp_alpha_min_1 = clamp_alpha_min_1;
  return r;
}

MaskRule MaskRule::wrapper_scaled(double eps, bool strict) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("MaskRule: wrapper eps must be > 0");
  }
  MaskRule r;
  r.kind = MaskKind::DefaultScaled;
  r.strict = strict;
  r.scale_form = ScaleForm::Wrapper;
  r.wrapper_eps = eps;
  return r;
}

MaskRule MaskRule::soft_negative(double c) {
  if (c < 0.0) throw std::invalid_argument("MaskRule: soft-negative c must be >= 0");
  MaskRule r;
  r.kind = MaskKind::SoftNegative;
  r.soft_c = c;
  return r;
}

MaskRule MaskRule::inner_product() {
  MaskRule r;
  r.kind = MaskKind::InnerProduct;
  return r;
}

MaskRule MaskRule::guaranteed_elementwise(double mu, double sigma, double alpha_k) {
  MaskRule r;
  r.kind = MaskKind::GuaranteedDescentElementwise;
  r.mu = mu;
  r.sigma = sigma;
  r.alpha_k = alpha_k;
  return r;
}

MaskRule MaskRule::guaranteed_inner(double mu, double eps_k, double alpha_k) {
  MaskRule r;
  r.kind = MaskKind::GuaranteedDescentInner;
  r.mu = mu;
  r.step_eps = eps_k;
  r.alpha_k = alpha_k;
  return r;
}

MaskRule MaskRule::identity() {
  MaskRule r;
  r.kind = MaskKind::Identity;
  return r;
}

std::string MaskRule::describe() const {
  switch (kind) {
    case MaskKind::DefaultScaled: {
      std::string s = "default_scaled(xi=" + std::to_string(xi) +
                      (strict ? ",strict" : ",nonstrict");
      if (clamp_alpha_min_1) s += ",clamped";
      if (scale_form == ScaleForm::Wrapper) s += ",wrapper";
      return s + ")";
    }
    case MaskKind::SoftNegative:
      return "soft_negative(c=" + std::to_string(soft_c) + ")";
    case MaskKind::InnerProduct:
      return "inner_product";
    case MaskKind::GuaranteedDescentElementwise:
      return "guaranteed_elementwise(mu=" + std::to_string(mu) +
             ",sigma=" + std::to_string(sigma) + ",alpha=" + std::to_string(alpha_k) + ")";
    case MaskKind::GuaranteedDescentInner:
      return "guaranteed_inner(mu=" + std::to_string(mu) +
             ",eps=" + std::to_string(step_eps) + ",alpha=" + std::to_string(alpha_k) + ")";
    case MaskKind::Identity:
      return "identity";
  }
  return "unknown";
}

MaskOutcome apply_mask(const MaskRule& rule, ConstView u, ConstView g,
                       std::optional<double> step_size) {
  require_same_dim(u, g, "apply_mask");
  if (u.empty()) throw std::invalid_argument("apply_mask: empty vectors");
  const std::size_t d = u.size();
  MaskOutcome out;
  out.weights.assign(d, 0.0);

  switch (rule.kind) {
    case MaskKind::DefaultScaled: {
      std::size_t nnz = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const double prod = u[i] * g[i];
        const bool aligned = rule.strict ? prod > 0.0 : prod >= 0.0;
        if (aligned) {
          out.weights[i] = 1.0;
          ++nnz;
        }
      }
      double alpha;
      if (rule.scale_form == ScaleForm::Listing) {
        alpha = static_cast<double>(d) / (static_cast<double>(nnz) + rule.xi);
      } else {
        const double mean = static_cast<double>(nnz) / static_cast<double>(d);
        alpha = 1.0 / (mean + rule.wrapper_eps);
      }
      if (rule.clamp_alpha_min_1) alpha = std::max(alpha, 1.0);
      for (auto& w : out.weights) w *= alpha;
      out.scale = alpha;
      out.aligned_count = nnz;
      break;
    }
    case MaskKind::SoftNegative: {
      std::size_t nnz = 0;
      for (std::size_t i = 0; i < d; ++i) {
        if (u[i] * g[i] > 0.0) {
          out.weights[i] = 1.0;
          ++nnz;
        } else {
          out.weights[i] = -rule.soft_c;
        }
      }
      out.scale = 1.0;
      out.aligned_count = nnz;
      break;
    }
    case MaskKind::InnerProduct: {
      const bool pass = dot(u, g) >= 0.0;
      if (pass) out.weights.assign(d, 1.0);
      out.scale = 1.0;
      out.aligned_count = pass ? d : 0;
      break;
    }
    case MaskKind::GuaranteedDescentElementwise: {
      if (step_size && rule.sigma < *step_size * rule.alpha_k) {
        throw std::invalid_argument(
            "apply_mask: guaranteed-descent elementwise mask needs sigma >= "
            "step_size * alpha_k");
      }
      std::size_t nnz = 0;
      const double coef = 0.5 * rule.mu * rule.sigma;
      for (std::size_t i = 0; i < d; ++i) {
        if (g[i] * u[i] >= coef * u[i] * u[i]) {
          out.weights[i] = rule.alpha_k;
          ++nnz;
        }
      }
      out.scale = rule.alpha_k;
      out.aligned_count = nnz;
      break;
    }
    case MaskKind::GuaranteedDescentInner: {
      const double threshold =
          0.5 * rule.alpha_k * rule.mu * rule.step_eps * norm2_sq(u);
      const bool pass = dot(g, u) >= threshold;
      if (pass) out.weights.assign(d, rule.alpha_k);
      out.scale = rule.alpha_k;
      out.aligned_count = pass ? d : 0;
      break;
    }
    case MaskKind::Identity: {
      out.weights.assign(d, 1.0);
      out.scale = 1.0;
      out.aligned_count = d;
      break;
    }
  }
  out.ratio = static_cast<double>(out.aligned_count) / static_cast<double>(d);
  return out;
}

double mask_ratio(ConstView u, ConstView g) {
  require_same_dim(u, g, "mask_ratio");
  if (u.empty()) throw std::invalid_argument("mask_ratio: empty vectors");
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] * g[i] > 0.0) ++nnz;
  }
  return static_cast<double>(nnz) / static_cast<double>(u.size());
}

Vec mask_weights_from_product(const MaskRule& rule, ConstView x) {
  const std::size_t d = x.size();
  Vec w(d, 0.0);
  switch (rule.kind) {
    case MaskKind::DefaultScaled: {
      std::size_t nnz = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const bool aligned = rule.strict ? x[i] > 0.0 : x[i] >= 0.0;
        if (aligned) {
          w[i] = 1.0;
          ++nnz;
        }
      }
      double alpha;
      if (rule.scale_form == ScaleForm::Listing) {
        alpha = static_cast<double>(d) / (static_cast<double>(nnz) + rule.xi);
      } else {
        alpha = 1.0 / (static_cast<double>(nnz) / static_cast<double>(d) +
                       rule.wrapper_eps);
      }
      if (rule.clamp_alpha_min_1) alpha = std::max(alpha, 1.0);
      for (auto& v : w) v *= alpha;
      return w;
    }
    case MaskKind::SoftNegative:
      for (std::size_t i = 0; i < d; ++i) w[i] = x[i] > 0.0 ? 1.0 : -rule.soft_c;
      return w;
    case MaskKind::InnerProduct: {
      double s = 0.0;
      for (double v : x) s += v;
      if (s >= 0.0) w.assign(d, 1.0);
      return w;
    }
    case MaskKind::Identity:
      w.assign(d, 1.0);
      return w;
    case MaskKind::GuaranteedDescentElementwise:
    case MaskKind::GuaranteedDescentInner:
      throw std::invalid_argument(
          "mask_weights_from_product: threshold masks are not a function of "
          "the alignment product alone");
  }
  return w;
}

PhiConditionReport check_phi_condition(const MaskRule& rule, ConstView x) {
  const Vec phi = mask_weights_from_product(rule, x);
  double x_dot_one_minus_phi = 0.0;
  double x_dot_phi = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x_dot_one_minus_phi += x[i] * (1.0 - phi[i]);
    x_dot_phi += x[i] * phi[i];
  }
  return PhiConditionReport{x_dot_one_minus_phi <= 0.0, x_dot_phi >= 0.0};
}

}  // namespace cautious
