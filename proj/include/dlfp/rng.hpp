#pragma once

// Portable seeded random numbers.
//
// std::mt19937_64 produces the same raw stream on every standard library, but
// the std distributions do not, so the transforms to uniform and normal
// variates are spelled out here. Stream splitting: the generator for stream
// `seed` is seeded with splitmix64(seed); trial j of an experiment with base
// seed B uses stream B + j.

#include "dlfp/core.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace dlfp {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by the Box-Muller transform (one variate per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  /// Uniformly distributed direction on the unit sphere.
  Vector unit_vector(Eigen::Index n) {
    Vector v = normal_vector(n);
    double nv = v.norm();
    while (nv == 0.0) {
      v = normal_vector(n);
      nv = v.norm();
    }
    return v / nv;
  }

  /// Uniform sample from the closed ball B(center, radius).
  Vector in_ball(const Vector& center, double radius) {
    const auto n = center.size();
    const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
    return center + r * unit_vector(n);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dlfp
