#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cautious {

using Vec = std::vector<double>;
using ConstView = std::span<const double>;

inline void require_same_dim(ConstView a, ConstView b, const char* where) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

inline double dot(ConstView a, ConstView b) {
  require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2_sq(ConstView a) { return dot(a, a); }

inline double norm2(ConstView a) { return std::sqrt(norm2_sq(a)); }

inline double norm1(ConstView a) {
  double acc = 0.0;
  for (double x : a) acc += std::fabs(x);
  return acc;
}

inline double norm_inf(ConstView a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::fabs(x));
  return m;
}

inline Vec hadamard(ConstView a, ConstView b) {
  require_same_dim(a, b, "hadamard");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// y += c * x
inline void axpy(double c, ConstView x, Vec& y) {
  require_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline Vec scaled(ConstView x, double c) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
  return out;
}

inline Vec sub(ConstView a, ConstView b) {
  require_same_dim(a, b, "sub");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline Vec sign_vec(ConstView x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sign(x[i]);
  return out;
}

inline bool all_finite(ConstView x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }
inline Vec ones(std::size_t n) { return Vec(n, 1.0); }

}  // namespace cautious
