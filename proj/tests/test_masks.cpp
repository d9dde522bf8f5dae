#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cautious/masks.hpp"
#include "cautious/rng.hpp"

using namespace cautious;

TEST_CASE("scaled default mask, hand-evaluated cases") {
  const MaskRule rule = MaskRule::default_scaled(1.0, true);

  SUBCASE("one aligned of two") {
    const MaskOutcome mo = apply_mask(rule, Vec{1.0, -1.0}, Vec{1.0, 1.0});
    CHECK(mo.weights[0] == 1.0);  // alpha = 2/(1+1)
    CHECK(mo.weights[1] == 0.0);
    CHECK(mo.scale == 1.0);
    CHECK(mo.aligned_count == 1);
    CHECK(mo.ratio == 0.5);
  }
  SUBCASE("fully aligned scales to 2/3") {
    const MaskOutcome mo = apply_mask(rule, Vec{1.0, 1.0}, Vec{1.0, 1.0});
    CHECK(mo.scale == doctest::Approx(2.0 / 3.0));
    CHECK(mo.weights[0] == doctest::Approx(2.0 / 3.0));
    CHECK(mo.weights[1] == doctest::Approx(2.0 / 3.0));
    CHECK(mo.ratio == 1.0);
  }
  SUBCASE("fully misaligned zeroes the update") {
    const MaskOutcome mo = apply_mask(rule, Vec{-1.0, -2.0}, Vec{1.0, 1.0});
    CHECK(mo.weights[0] == 0.0);
    CHECK(mo.weights[1] == 0.0);
    CHECK(mo.ratio == 0.0);
  }
}

TEST_CASE("inner-product mask fires on the sign of u.g") {
  const MaskRule rule = MaskRule::inner_product();
  const MaskOutcome neg = apply_mask(rule, Vec{-1.0, 0.0}, Vec{1.0, 0.0});
  CHECK(neg.weights[0] == 0.0);
  CHECK(neg.weights[1] == 0.0);
  CHECK(neg.ratio == 0.0);

  const MaskOutcome pos = apply_mask(rule, Vec{1.0, -0.5}, Vec{1.0, 0.1});
  CHECK(pos.weights[0] == 1.0);
  CHECK(pos.weights[1] == 1.0);
  CHECK(pos.ratio == 1.0);
}

TEST_CASE("elementwise threshold mask, hand-evaluated") {
  const MaskRule rule = MaskRule::guaranteed_elementwise(1.0, 0.1, 1.0);
  // thresholds (mu sigma / 2) u^2 = (0.05, 0.0005); products (1, 0.0001)
  const MaskOutcome mo = apply_mask(rule, Vec{1.0, 0.1}, Vec{1.0, 0.001});
  CHECK(mo.weights[0] == 1.0);
  CHECK(mo.weights[1] == 0.0);
  CHECK(mo.aligned_count == 1);
}

TEST_CASE("threshold mask precondition is rejected at apply time") {
  const MaskRule rule = MaskRule::guaranteed_elementwise(1.0, 0.1, 1.0);
  CHECK_THROWS_AS(apply_mask(rule, Vec{1.0}, Vec{1.0}, 0.2), std::invalid_argument);
  CHECK_NOTHROW(apply_mask(rule, Vec{1.0}, Vec{1.0}, 0.05));
}

TEST_CASE("inner threshold form masks everything or nothing") {
  const MaskRule rule = MaskRule::guaranteed_inner(2.0, 0.5, 1.5);
  // threshold = (alpha mu eps/2) ||u||^2 = 0.75 ||u||^2
  const Vec u{1.0, 1.0};
  const MaskOutcome hit = apply_mask(rule, u, Vec{2.0, 2.0});  // g.u = 4 >= 1.5
  CHECK(hit.weights[0] == 1.5);
  CHECK(hit.weights[1] == 1.5);
  const MaskOutcome miss = apply_mask(rule, u, Vec{0.5, 0.5});  // g.u = 1 < 1.5
  CHECK(miss.weights[0] == 0.0);
  CHECK(miss.ratio == 0.0);
}

TEST_CASE("mask_ratio") {
  CHECK(mask_ratio(Vec{1.0, -1.0, 2.0}, Vec{1.0, 1.0, 1.0}) == doctest::Approx(2.0 / 3.0));
  const Vec u{0.3, -2.0, 5.0};
  CHECK(mask_ratio(u, u) == 1.0);
  CHECK(mask_ratio(u, scaled(u, -1.0)) == 0.0);
  CHECK_THROWS_AS(mask_ratio(Vec{1.0}, Vec{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("phi conditions, hand-evaluated") {
  const MaskRule rule = MaskRule::default_scaled(1.0, true);
  SUBCASE("mixed signs satisfy both") {
    const PhiConditionReport r = check_phi_condition(rule, Vec{1.0, -1.0});
    CHECK(r.decrease_ok);
    CHECK(r.monotone_ok);
  }
  SUBCASE("all aligned breaks the decrease condition for unclamped alpha") {
    const PhiConditionReport r = check_phi_condition(rule, Vec{1.0, 1.0, 1.0, 1.0});
    CHECK_FALSE(r.decrease_ok);  // alpha = 4/5 < 1
    CHECK(r.monotone_ok);
  }
  SUBCASE("clamped alpha restores it") {
    const MaskRule clamped = MaskRule::default_scaled(1.0, true, true);
    const PhiConditionReport r = check_phi_condition(clamped, Vec{1.0, 1.0, 1.0, 1.0});
    CHECK(r.decrease_ok);
    CHECK(r.monotone_ok);
  }
  SUBCASE("zero map is monotone") {
    const PhiConditionReport r =
        check_phi_condition(MaskRule::soft_negative(0.0), Vec{-1.0, -2.0, -0.5});
    CHECK(r.monotone_ok);
  }
}

TEST_CASE("soft-negative mask weights") {
  const MaskOutcome mo = apply_mask(MaskRule::soft_negative(0.1), Vec{1.0, -1.0, 0.0},
                                    Vec{1.0, 1.0, 1.0});
  CHECK(mo.weights[0] == 1.0);
  CHECK(mo.weights[1] == -0.1);
  CHECK(mo.weights[2] == -0.1);  // zero product is not aligned
  CHECK(mo.scale == 1.0);
  CHECK(mo.aligned_count == 1);
}

TEST_CASE("soft-negative at c = 0 is the unscaled strict indicator") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec u = rng.normal_vec(5);
    const Vec g = rng.normal_vec(5);
    const MaskOutcome mo = apply_mask(MaskRule::soft_negative(0.0), u, g);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(mo.weights[i] == (u[i] * g[i] > 0.0 ? 1.0 : 0.0));
    }
    CHECK(mo.scale == 1.0);
  }
}

TEST_CASE("zero products follow the comparator") {
  const Vec u{1.0, 0.0};
  const Vec g{0.0, 1.0};
  const MaskOutcome strict = apply_mask(MaskRule::default_scaled(1.0, true), u, g);
  CHECK(strict.aligned_count == 0);
  const MaskOutcome loose = apply_mask(MaskRule::default_scaled(1.0, false), u, g);
  CHECK(loose.aligned_count == 2);
}

TEST_CASE("identity mask") {
  const MaskOutcome mo = apply_mask(MaskRule::identity(), Vec{1.0, -2.0}, Vec{3.0, 4.0});
  CHECK(mo.weights[0] == 1.0);
  CHECK(mo.weights[1] == 1.0);
  CHECK(mo.scale == 1.0);
  CHECK(mo.ratio == 1.0);
}

TEST_CASE("wrapper scale form matches the listing when eps = xi/d") {
  Rng rng(4);
  const std::size_t d = 4;
  MaskRule wrapper = MaskRule::wrapper_scaled(1.0 / static_cast<double>(d), true);
  const MaskRule listing = MaskRule::default_scaled(1.0, true);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec u = rng.normal_vec(d);
    const Vec g = rng.normal_vec(d);
    const MaskOutcome a = apply_mask(wrapper, u, g);
    const MaskOutcome b = apply_mask(listing, u, g);
    CHECK(a.scale == doctest::Approx(b.scale));
    CHECK(a.aligned_count == b.aligned_count);
  }
}

TEST_CASE("default mask dichotomy and ratio bounds") {
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + rng.next_u64() % 12;
    const Vec u = rng.normal_vec(d);
    const Vec g = rng.normal_vec(d);
    const MaskOutcome mo = apply_mask(MaskRule::default_scaled(1.0, true), u, g);
    for (double w : mo.weights) {
      CHECK((w == 0.0 || w == mo.scale));
    }
    CHECK(mo.ratio >= 0.0);
    CHECK(mo.ratio <= 1.0);
    const double ratio = mask_ratio(u, g);
    CHECK(ratio == mo.ratio);
    bool all_positive = true;
    for (std::size_t i = 0; i < d; ++i) all_positive = all_positive && u[i] * g[i] > 0.0;
    CHECK((ratio == 1.0) == all_positive);
  }
}

TEST_CASE("clamped mask dominates the positive part") {
  Rng rng(123);
  const MaskRule clamped = MaskRule::default_scaled(1.0, true, true);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + rng.next_u64() % 10;
    const Vec x = rng.normal_vec(d);
    const Vec phi = mask_weights_from_product(clamped, x);
    double x_phi = 0.0;
    double positive_part = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      x_phi += x[i] * phi[i];
      positive_part += std::max(x[i], 0.0);
    }
    CHECK(x_phi >= positive_part - 1e-12 * (1.0 + positive_part));
  }
}

TEST_CASE("inner-product mask output is constant") {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.next_u64() % 8;
    const MaskOutcome mo =
        apply_mask(MaskRule::inner_product(), rng.normal_vec(d), rng.normal_vec(d));
    for (double w : mo.weights) CHECK(w == mo.weights[0]);
    CHECK((mo.weights[0] == 0.0 || mo.weights[0] == 1.0));
  }
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(apply_mask(MaskRule::default_scaled(), Vec{1.0}, Vec{1.0, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_mask(MaskRule::default_scaled(), Vec{}, Vec{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(MaskRule::default_scaled(0.0), std::invalid_argument);
  CHECK_THROWS_AS(MaskRule::soft_negative(-0.5), std::invalid_argument);
  CHECK_THROWS_AS(
      check_phi_condition(MaskRule::guaranteed_elementwise(1.0, 1.0, 1.0), Vec{1.0}),
      std::invalid_argument);
}
