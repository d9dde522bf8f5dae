#pragma once

#include <cmath>
#include <cstdint>

#include "cautious/vec.hpp"

namespace cautious {

// Deterministic splitmix64 generator. std:: distributions are
// implementation-defined, so problem generation rolls its own draws to keep
// generated data bitwise-reproducible for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // standard normal via Marsaglia polar method (no cached spare)
  double normal() {
    for (;;) {
      const double a = 2.0 * uniform01() - 1.0;
      const double b = 2.0 * uniform01() - 1.0;
      const double r = a * a + b * b;
      if (r > 0.0 && r < 1.0) {
        return a * std::sqrt(-2.0 * std::log(r) / r);
      }
    }
  }

  Vec normal_vec(std::size_t n) {
    Vec out(n);
    for (auto& x : out) x = normal();
    return out;
  }

  Vec uniform_vec(std::size_t n, double lo, double hi) {
    Vec out(n);
    for (auto& x : out) x = uniform(lo, hi);
    return out;
  }

 private:
  std::uint64_t state_;
};

}  // namespace cautious
