#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cautious/verify.hpp"

namespace cautious {

struct SuiteCase {
  std::uint64_t seed = 0;
  std::string instance;
  Verdict verdict;
};

struct SuiteResult {
  std::string name;
  std::vector<SuiteCase> cases;
  int total = 0;
  int failed = 0;
  double worst_margin = 0.0;
  std::string note;

  bool all_passed() const { return failed == 0; }
};

// Randomized mu-smooth instances, one base vs cautious step at
// eps = step_frac * dominance bound.
SuiteResult run_single_step_suite(int n_instances, std::uint64_t seed0,
                                  double step_frac, int workers = 0);

// Convex instances with the inner-product mask across a fixed step-size grid
// spanning [1e-3, 10].
SuiteResult run_inner_product_suite(int n_instances, std::uint64_t seed0,
                                    int workers = 0);

// Threshold masks, one cautious step each; elementwise keeps
// sigma >= eps * alpha_k, the inner form draws arbitrary step sizes.
SuiteResult run_guaranteed_descent_suite(int n_instances, bool elementwise,
                                         std::uint64_t seed0, int workers = 0);

// Averaged alignment bound on recorded cautious runs (toy + logistic).
SuiteResult run_convergence_bound_suite();

// Identity-mask reduction for GDM, AdamW, Lion.
SuiteResult run_reduction_suite(int n_steps = 100);

// All of the above at their standard sizes (the `verify` CLI command).
std::vector<SuiteResult> run_all_suites(int workers = 0);

}  // namespace cautious
