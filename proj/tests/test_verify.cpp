#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "cautious/rng.hpp"
#include "cautious/suites.hpp"
#include "cautious/verify.hpp"

using namespace cautious;

TEST_CASE("step size bound, hand evaluation") {
  // u=(1,-1), g=(1,1), weights (1,0): Delta = 1, r = (0,-1)
  const double bound =
      step_size_bound(Vec{1.0, -1.0}, Vec{1.0, 1.0}, Vec{1.0, 0.0}, 1.0);
  CHECK(bound == doctest::Approx(2.0 / (2.0 * std::sqrt(2.0) + 1.0)));
  CHECK(bound == doctest::Approx(0.5224).epsilon(1e-4));
}

TEST_CASE("step size bound edge cases") {
  // fully aligned with unit weights: r = 0
  CHECK(std::isinf(step_size_bound(Vec{1.0, 2.0}, Vec{1.0, 1.0}, Vec{1.0, 1.0}, 1.0)));
  // zero update
  CHECK(std::isinf(step_size_bound(Vec{0.0, 0.0}, Vec{1.0, 1.0}, Vec{0.0, 0.0}, 1.0)));
  // Delta < 0: all-aligned input with sub-unit weights
  CHECK_THROWS_AS(step_size_bound(Vec{1.0, 1.0}, Vec{1.0, 1.0}, Vec{0.5, 0.5}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(step_size_bound(Vec{1.0}, Vec{1.0}, Vec{1.0}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("single-step dominance, frozen misaligned-momentum scenario") {
  // toy kappa=4 at w=(1,1); GDM beta=0.9 with s=(8,-20) makes coordinate 2
  // oppose the gradient. All expected numbers recomputed here from scratch.
  const Objective toy = make_problem(ProblemSpec::toy_quadratic(4.0));
  OptimizerConfig cfg = OptimizerConfig::gdm(0.01, 0.9).cautious(MaskRule::soft_negative(0.0));
  OptimizerState st = init_state(cfg, 2);
  st.s = {8.0, -20.0};

  const double ux = 0.9 * 8.0 + 8.0;     // 15.2
  const double uy = 0.9 * -20.0 + 2.0;   // -16
  const double delta = -(uy * 2.0);      // masked coordinate 2: 32
  const double r_norm = std::fabs(uy);
  const double u_norm = std::sqrt(ux * ux + uy * uy);
  const double bound = 2.0 * delta / (8.0 * r_norm * (2.0 * u_norm + r_norm));
  const double eps = 0.9 * bound;

  const Verdict v = check_single_step(toy, Vec{1.0, 1.0}, st, cfg, eps);
  CHECK(v.passed);

  const double base_loss =
      4.0 * (1.0 - eps * ux) * (1.0 - eps * ux) + (1.0 - eps * uy) * (1.0 - eps * uy);
  const double cautious_loss = 4.0 * (1.0 - eps * ux) * (1.0 - eps * ux) + 1.0;
  CHECK(v.margin == doctest::Approx(base_loss - cautious_loss).epsilon(1e-12));
  CHECK(v.margin > 0.25);
}

TEST_CASE("single-step dominance at zero step size is an exact tie") {
  const Objective toy = make_problem(ProblemSpec::toy_quadratic(4.0));
  OptimizerConfig cfg = OptimizerConfig::gdm(0.01, 0.9).cautious();
  OptimizerState st = init_state(cfg, 2);
  st.s = {1.0, -1.0};
  const Verdict v = check_single_step(toy, Vec{1.0, 1.0}, st, cfg, 0.0);
  CHECK(v.passed);
  CHECK(v.margin == 0.0);
}

TEST_CASE("inner-product dominance at any step size, hand case") {
  // L = (w1^2 + w2^2)/2, w=(1,0), u=(-1,0): u.g = -1 so the cautious step
  // stays put while the base step walks uphill
  const Objective sphere = make_problem(ProblemSpec::separable_quadratic({1.0, 1.0}));
  OptimizerConfig cfg =
      OptimizerConfig::gdm(0.01, 0.5).cautious(MaskRule::inner_product());
  for (double eps : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    OptimizerState st = init_state(cfg, 2);
    st.s = {-4.0, 0.0};  // u = 0.5 s + g = (-1, 0)
    const Verdict v = check_inner_product_any_step(sphere, Vec{1.0, 0.0}, st, cfg, eps);
    CHECK(v.passed);
    const double expected_margin = 0.5 * ((1.0 + eps) * (1.0 + eps) - 1.0);
    CHECK(v.margin == doctest::Approx(expected_margin).epsilon(1e-12));
  }
}

TEST_CASE("inner-product mask ties exactly when aligned") {
  const Objective sphere = make_problem(ProblemSpec::separable_quadratic({1.0, 1.0}));
  OptimizerConfig cfg =
      OptimizerConfig::gdm(0.01, 0.5).cautious(MaskRule::inner_product());
  OptimizerState st = init_state(cfg, 2);
  const Verdict v = check_inner_product_any_step(sphere, Vec{1.0, 0.0}, st, cfg, 2.0);
  CHECK(v.passed);
  CHECK(v.margin == 0.0);  // weights all-ones reproduce the base step
}

TEST_CASE("separable losses: elementwise indicator dominates at any step size") {
  const Objective sep = make_problem(ProblemSpec::separable_quadratic({1.0, 2.0}));
  OptimizerConfig cfg =
      OptimizerConfig::gdm(0.01, 0.9).cautious(MaskRule::soft_negative(0.0));
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    OptimizerState st = init_state(cfg, 2);
    st.s = scaled(rng.normal_vec(2), 5.0);
    const Vec w = rng.normal_vec(2);
    for (double eps : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
      const Verdict v = check_single_step(sep, w, st, cfg, eps);
      CHECK(v.passed);
    }
  }
}

TEST_CASE("guaranteed descent: masked-out step has zero margin") {
  const Objective toy = make_problem(ProblemSpec::toy_quadratic(4.0));
  // enormous threshold masks every coordinate
  OptimizerConfig cfg = OptimizerConfig::gdm(0.01, 0.9).cautious(
      MaskRule::guaranteed_elementwise(8.0, 1e6, 1.0));
  cfg.lr = 1e-3;
  OptimizerState st = init_state(cfg, 2);
  st.s = {3.0, 1.0};
  const Verdict v = check_guaranteed_descent(toy, Vec{1.0, 1.0}, st, cfg);
  CHECK(v.passed);
  CHECK(v.margin == 0.0);
}

TEST_CASE("guaranteed descent inner form masks out at huge step sizes") {
  const Objective toy = make_problem(ProblemSpec::toy_quadratic(4.0));
  OptimizerConfig cfg = OptimizerConfig::gdm(1000.0, 0.9).cautious(
      MaskRule::guaranteed_inner(8.0, 1000.0, 1.0));
  OptimizerState st = init_state(cfg, 2);
  st.s = {0.5, 0.5};
  const Verdict v = check_guaranteed_descent(toy, Vec{1.0, 1.0}, st, cfg);
  CHECK(v.passed);
  // threshold (alpha mu eps/2)||u||^2 dwarfs g.u, so nothing moves
  CHECK(v.margin == 0.0);
}

TEST_CASE("guaranteed descent elementwise precondition") {
  const Objective toy = make_problem(ProblemSpec::toy_quadratic(4.0));
  OptimizerConfig cfg = OptimizerConfig::gdm(0.5, 0.9).cautious(
      MaskRule::guaranteed_elementwise(8.0, 0.1, 1.0));  // sigma < lr * alpha
  OptimizerState st = init_state(cfg, 2);
  CHECK_THROWS_AS(check_guaranteed_descent(toy, Vec{1.0, 1.0}, st, cfg),
                  std::invalid_argument);

  // the inner mask's eps_k must match the step size actually taken
  OptimizerConfig mismatched = OptimizerConfig::gdm(0.5, 0.9).cautious(
      MaskRule::guaranteed_inner(8.0, 0.1, 1.0));
  OptimizerState st2 = init_state(mismatched, 2);
  CHECK_THROWS_AS(check_guaranteed_descent(toy, Vec{1.0, 1.0}, st2, mismatched),
                  std::invalid_argument);
}

TEST_CASE("convergence bound on a short cautious toy run") {
  const Objective toy = make_problem(ProblemSpec::toy_quadratic(4.0));
  const OptimizerConfig cfg = OptimizerConfig::gdm(0.01, 0.99).cautious();
  const Trajectory traj = run_steps(cfg, toy, {1.0, 1.0}, 1000);
  const Verdict v = check_convergence_bound(traj, toy, cfg.lr, *cfg.mask);
  CHECK(v.passed);
  CHECK(v.margin > 0.0);
}

TEST_CASE("convergence bound is trivial from the optimum") {
  const Objective toy = make_problem(ProblemSpec::toy_quadratic(4.0));
  const OptimizerConfig cfg = OptimizerConfig::gdm(0.01, 0.99).cautious();
  const Trajectory traj = run_steps(cfg, toy, {0.0, 0.0}, 1);
  const Verdict v = check_convergence_bound(traj, toy, cfg.lr, *cfg.mask);
  CHECK(v.passed);
  CHECK(v.margin == 0.0);
}

TEST_CASE("reduction identity across base optimizers") {
  const Objective toy = make_problem(ProblemSpec::toy_quadratic(4.0));
  for (const OptimizerConfig& cfg :
       {OptimizerConfig::gdm(0.01, 0.99), OptimizerConfig::adamw(0.05),
        OptimizerConfig::lion(0.005)}) {
    const Verdict v = check_reduction(cfg, toy, {1.0, 1.0}, 100);
    CHECK(v.passed);
  }
}

TEST_CASE("suite verdicts are deterministic under rerun") {
  const SuiteResult a = run_single_step_suite(50, 0, 0.9, 1);
  const SuiteResult b = run_single_step_suite(50, 0, 0.9, 2);
  REQUIRE(a.cases.size() == b.cases.size());
  for (std::size_t i = 0; i < a.cases.size(); ++i) {
    CHECK(a.cases[i].verdict.margin == b.cases[i].verdict.margin);
    CHECK(a.cases[i].verdict.passed == b.cases[i].verdict.passed);
  }
  CHECK(a.all_passed());
}

TEST_CASE("small versions of the randomized suites pass") {
  CHECK(run_single_step_suite(100, 7, 0.9, 0).all_passed());
  CHECK(run_inner_product_suite(40, 7, 0).all_passed());
  CHECK(run_guaranteed_descent_suite(100, true, 7, 0).all_passed());
  CHECK(run_guaranteed_descent_suite(100, false, 7, 0).all_passed());
  CHECK(run_reduction_suite().all_passed());
}
