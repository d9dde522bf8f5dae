#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "cautious/vec.hpp"

namespace cautious {

// A differentiable loss oracle. Immutable after construction; safe for
// concurrent read-only evaluation.
struct Objective {
  std::size_t dim = 0;
  std::function<double(ConstView)> loss;
  std::function<Vec(ConstView)> grad;
  std::optional<double> mu;             // gradient-Lipschitz constant
  bool convex = false;
  std::optional<double> optimum_value;  // known minimum of loss
  std::string name;
};

enum class ProblemKind {
  ToyQuadratic,          // L(w) = kappa*w1^2 + w2^2, dim 2
  SeparableQuadratic,    // L(w) = 1/2 ||a o w||^2
  RandomSmoothQuadratic, // L(w) = 1/2 (w-w*)^T A (w-w*), lambda_max(A) = mu
  Rosenbrock,            // chained Rosenbrock
  Logistic,              // synthetic logistic regression + 1e-4 L2
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::ToyQuadratic;
  double kappa = 4.0;          // ToyQuadratic
  Vec a;                       // SeparableQuadratic
  std::size_t dim = 2;         // RandomSmoothQuadratic / Rosenbrock / Logistic
  double mu = 1.0;             // RandomSmoothQuadratic
  std::uint64_t seed = 0;      // RandomSmoothQuadratic / Logistic
  std::size_t n_samples = 128; // Logistic

  static ProblemSpec toy_quadratic(double kappa = 4.0);
  static ProblemSpec separable_quadratic(Vec a);
  static ProblemSpec random_smooth_quadratic(std::size_t dim, double mu,
                                             std::uint64_t seed);
  static ProblemSpec rosenbrock(std::size_t dim);
  static ProblemSpec logistic(std::size_t n_samples, std::size_t dim,
                              std::uint64_t seed);

  std::string describe() const;
};

Objective make_problem(const ProblemSpec& spec);

// Central differences (loss(w+h e_i) - loss(w-h e_i)) / (2h), one uniform h.
Vec finite_diff_gradient(const Objective& obj, ConstView w, double h);

// max over sampled pairs of ||grad(w)-grad(w')|| / ||w-w'||; a lower bound on
// the true gradient-Lipschitz constant. Degenerate pairs (w == w') are
// skipped.
double sample_smoothness(const Objective& obj, int n_pairs, std::uint64_t seed);

}  // namespace cautious
