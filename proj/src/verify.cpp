#include "cautious/verify.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace cautious {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double step_size_bound(ConstView u, ConstView g, ConstView mask_weights, double mu) {
  require_same_dim(u, g, "step_size_bound");
  require_same_dim(u, mask_weights, "step_size_bound");
  if (!(mu > 0.0)) throw std::invalid_argument("step_size_bound: mu must be > 0");

  double delta = 0.0;
  Vec r(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    delta -= u[i] * g[i] * (1.0 - mask_weights[i]);
    r[i] = u[i] * (1.0 - mask_weights[i]);
  }
  if (delta < 0.0) {
    throw std::invalid_argument(
        "step_size_bound: Delta(u o g) < 0, mask violates the dominance "
        "precondition at this point");
  }
  const double r_norm = norm2(r);
  if (r_norm == 0.0) return std::numeric_limits<double>::infinity();
  const double u_norm = norm2(u);
  return 2.0 * delta / (mu * r_norm * (2.0 * u_norm + r_norm));
}

Verdict check_single_step(const Objective& objective, ConstView w,
                          const OptimizerState& state, const OptimizerConfig& config,
                          double step_size) {
  if (!objective.mu) {
    throw std::invalid_argument("check_single_step: objective needs mu");
  }
  if (!config.mask) {
    throw std::invalid_argument("check_single_step: config needs a mask rule");
  }
  const Vec g = objective.grad(w);

  // the comparison is at one fixed step size; schedules do not apply
  OptimizerConfig base_cfg = config;
  base_cfg.lr = step_size;
  base_cfg.mask.reset();
  base_cfg.schedule.reset();
  OptimizerConfig cautious_cfg = config;
  cautious_cfg.lr = step_size;
  cautious_cfg.schedule.reset();

  OptimizerState base_state = state;
  OptimizerState cautious_state = state;
  const StepReport base = base_step(base_cfg, base_state, w, g, &objective);
  const StepReport cautious =
      cautious_step(cautious_cfg, cautious_state, w, g, &objective);

  Verdict v;
  v.margin = *base.loss_after - *cautious.loss_after;
  v.passed = v.margin >= -verdict_tol(*base.loss_after);
  v.context["loss_base"] = fmt(*base.loss_after);
  v.context["loss_cautious"] = fmt(*cautious.loss_after);
  v.context["step_size"] = fmt(step_size);
  v.context["dim"] = std::to_string(w.size());
  return v;
}

Verdict check_inner_product_any_step(const Objective& objective, ConstView w,
                                     const OptimizerState& state,
                                     const OptimizerConfig& config,
                                     double step_size) {
  if (!objective.convex) {
    throw std::invalid_argument("check_inner_product_any_step: objective must be convex");
  }
  if (!config.mask || config.mask->kind != MaskKind::InnerProduct) {
    throw std::invalid_argument(
        "check_inner_product_any_step: config needs the inner-product mask");
  }
  return check_single_step(objective, w, state, config, step_size);
}

Verdict check_guaranteed_descent(const Objective& objective, ConstView w,
                                 const OptimizerState& state,
                                 const OptimizerConfig& config) {
  if (!config.mask ||
      (config.mask->kind != MaskKind::GuaranteedDescentElementwise &&
       config.mask->kind != MaskKind::GuaranteedDescentInner)) {
    throw std::invalid_argument(
        "check_guaranteed_descent: config needs a guaranteed-descent mask");
  }
  if (config.mask->kind == MaskKind::GuaranteedDescentInner &&
      config.mask->step_eps != config.lr) {
    throw std::invalid_argument(
        "check_guaranteed_descent: inner mask eps_k must equal the step size");
  }
  if (!objective.mu) {
    throw std::invalid_argument("check_guaranteed_descent: objective needs mu");
  }
  const Vec g = objective.grad(w);
  OptimizerState st = state;
  const StepReport report = cautious_step(config, st, w, g, &objective);

  Verdict v;
  v.margin = *report.loss_before - *report.loss_after;
  v.passed = v.margin >= -verdict_tol(*report.loss_before);
  v.context["loss_before"] = fmt(*report.loss_before);
  v.context["loss_after"] = fmt(*report.loss_after);
  v.context["mask"] = config.mask->describe();
  return v;
}

Verdict check_convergence_bound(const Trajectory& trajectory,
                                const Objective& objective, double step_size,
                                const MaskRule& mask_rule) {
  if (!objective.mu || !objective.optimum_value) {
    throw std::invalid_argument(
        "check_convergence_bound: objective needs mu and optimum_value");
  }
  const std::size_t t_count = trajectory.n_steps();
  if (t_count < 1) {
    throw std::invalid_argument("check_convergence_bound: empty trajectory");
  }
  double lhs_sum = 0.0;
  double b_t = 0.0;
  for (std::size_t t = 0; t < t_count; ++t) {
    const auto& pt = trajectory.points[t];
    const Vec g = objective.grad(pt.w);
    const Vec x = hadamard(g, pt.u);
    const MaskOutcome mo = apply_mask(mask_rule, pt.u, g);
    // ||x||_phi = x^T phi(x) with phi evaluated at this step
    lhs_sum += dot(x, mo.weights);
    b_t += norm2_sq(pt.u);
  }
  const double t_real = static_cast<double>(t_count);
  const double lhs = lhs_sum / t_real;
  const double rhs =
      (trajectory.points.front().loss - *objective.optimum_value) /
          (t_real * step_size) +
      (*objective.mu * step_size / (2.0 * t_real)) * b_t;

  Verdict v;
  v.margin = rhs - lhs;
  v.passed = v.margin >= -verdict_tol(std::max(std::fabs(lhs), std::fabs(rhs)));
  v.context["lhs"] = fmt(lhs);
  v.context["rhs"] = fmt(rhs);
  v.context["B_T"] = fmt(b_t);
  v.context["T"] = std::to_string(t_count);
  return v;
}

Verdict check_reduction(const OptimizerConfig& config, const Objective& objective,
                        Vec w0, int n_steps) {
  OptimizerConfig base_cfg = config;
  base_cfg.mask.reset();
  OptimizerConfig id_cfg = config;
  id_cfg.mask = MaskRule::identity();

  const Trajectory base = run_steps(base_cfg, objective, w0, n_steps);
  const Trajectory ident = run_steps(id_cfg, objective, std::move(w0), n_steps);

  Verdict v;
  v.passed = base.points.size() == ident.points.size();
  std::size_t first_diff = base.points.size();
  if (v.passed) {
    for (std::size_t k = 0; k < base.points.size() && v.passed; ++k) {
      const Vec& a = base.points[k].w;
      const Vec& b = ident.points[k].w;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) {
          v.passed = false;
          first_diff = k;
          break;
        }
      }
    }
  }
  v.margin = v.passed ? 0.0 : -1.0;
  v.context["optimizer"] = config.describe();
  if (!v.passed) v.context["first_divergent_step"] = std::to_string(first_diff);
  return v;
}

}  // namespace cautious
