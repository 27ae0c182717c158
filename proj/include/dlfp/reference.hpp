#pragma once

// Reference nearest-point computations used to validate the solvers.
// These are deliberately slow and independent of the double-layer iteration.

#include "dlfp/sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <variant>
#include <vector>

namespace dlfp {

/// Sets with a closed-form metric projection.
using SimpleSet = std::variant<HalfSpace, Hyperplane, Ball>;

inline Vector project(const SimpleSet& s, const Vector& x) {
  return std::visit([&](const auto& c) { return c.apply(x); }, s);
}

/// d(x, C_i) for a single simple set.
inline double distance_to(const SimpleSet& s, const Vector& x) {
  return std::visit([&](const auto& c) { return c.distance(x); }, s);
}

struct OracleOptions {
  long max_sweeps = 1'000'000;
  double change_tol = 1e-14;      // relative to max(1, ||x||)
  double feasibility_tol = 1e-11; // max distance to an individual set at exit
  bool grid_cross_check = true;   // only active for <= 2 sets in <= 3 dimensions
  int grid_points_per_axis = 81;
};

struct NearestPoint {
  Vector point;
  double distance;
  long sweeps;
};

namespace detail {

// One Dykstra correction for set s: z = x + p; y = P(z); p = z - y; x = y.
inline void dykstra_update(const SimpleSet& s, Vector& x, Eigen::Ref<Vector> p, Vector& z) {
  z = x + p;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, HalfSpace>) {
          const double r = c.normal().dot(z) - c.offset();
          if (r > 0.0) {
            x = z - (r / c.normal_sq_norm()) * c.normal();
          } else {
            x = z;
          }
        } else if constexpr (std::is_same_v<T, Hyperplane>) {
          const double r = c.normal().dot(z) - c.offset();
          x = z - (r / c.normal_sq_norm()) * c.normal();
        } else {
          x = c.apply(z);
        }
      },
      s);
  p = z - x;
}

inline double grid_distance_impl(std::span<const SimpleSet> sets, const Vector& x, double radius,
                                 int per_axis, double member_tol) {
  const auto n = static_cast<int>(x.size());
  const double h = 2.0 * radius / (per_axis - 1);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vector y(n);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (int j = 0; j < n; ++j) y(j) = x(j) - radius + h * idx[static_cast<std::size_t>(j)];
    bool inside = true;
    for (const auto& s : sets) {
      if (distance_to(s, y) > member_tol) {
        inside = false;
        break;
      }
    }
    if (inside) best = std::min(best, (y - x).norm());
    int j = 0;
    while (j < n && ++idx[static_cast<std::size_t>(j)] == per_axis) {
      idx[static_cast<std::size_t>(j)] = 0;
      ++j;
    }
    if (j == n) break;
  }
  return best;
}

}  // namespace detail

/// Brute-force d(x, intersection) by scanning a cube of half-width `radius`
/// centred at x. Accuracy is about the grid spacing; meant for n <= 3.
inline double grid_distance(std::span<const SimpleSet> sets, const Vector& x, double radius,
                            int per_axis) {
  if (per_axis < 2) throw InvalidParameterError("grid_distance: need at least 2 points per axis");
  return detail::grid_distance_impl(sets, x, radius, per_axis, 0.0);
}

/// Metric projection of x onto the intersection of the sets, by Dykstra's
/// alternating projection scheme (which, unlike plain alternating projections,
/// converges to the nearest point rather than to some point of the intersection).
inline NearestPoint nearest_point(std::span<const SimpleSet> sets, const Vector& x,
                                  const OracleOptions& opts = {}) {
  if (sets.empty()) return {x, 0.0, 0};
  const auto n = x.size();
  const auto m = static_cast<Eigen::Index>(sets.size());
  Matrix increments = Matrix::Zero(n, m);
  Vector y = x;
  Vector z(n);
  Vector prev(n);
  for (long sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    prev = y;
    for (Eigen::Index i = 0; i < m; ++i) {
      detail::dykstra_update(sets[static_cast<std::size_t>(i)], y, increments.col(i), z);
    }
    if (!y.allFinite()) throw OracleFailureError("nearest_point: non-finite iterate");
    const double change = (y - prev).norm();
    if (change <= opts.change_tol * std::max(1.0, y.norm())) {
      double worst = 0.0;
      for (const auto& s : sets) worst = std::max(worst, distance_to(s, y));
      if (worst <= opts.feasibility_tol) return {y, (y - x).norm(), sweep};
    }
  }
  throw OracleFailureError("nearest_point: no convergence within the sweep budget");
}

/// d(x, C_1 ∩ ... ∩ C_m). For at most two sets in at most three dimensions
/// the result is also checked against a dense grid scan.
inline double distance_oracle(std::span<const SimpleSet> sets, const Vector& x,
                              const OracleOptions& opts = {}) {
  for (const auto& s : sets) {
    const auto dim = std::visit([](const auto& c) { return c.dim(); }, s);
    if (dim != static_cast<Index>(x.size())) throw DimensionMismatchError("distance_oracle");
  }
  const NearestPoint np = nearest_point(sets, x, opts);
  const auto n = x.size();
  if (opts.grid_cross_check && sets.size() <= 2 && n <= 3 && np.distance > 0.0) {
    const double radius = 1.25 * np.distance;
    const int per_axis = opts.grid_points_per_axis;
    const double h = 2.0 * radius / (per_axis - 1);
    // Scan with relaxed membership: the true nearest point has a grid
    // neighbour within `slack` of every set, so the scan can not be far above d.
    // Scan with exact membership: every hit lies in C, so it can not be below d.
    const double slack = h * std::sqrt(static_cast<double>(n));
    const double relaxed = detail::grid_distance_impl(sets, x, radius, per_axis, slack);
    const double exact = detail::grid_distance_impl(sets, x, radius, per_axis, 0.0);
    const double fuzz = 1e-9 * std::max(1.0, np.distance);
    if (!(relaxed <= np.distance + slack + fuzz) || !(np.distance <= exact + fuzz)) {
      throw OracleFailureError("distance_oracle: grid cross-check disagrees with Dykstra result");
    }
  }
  return np.distance;
}

}  // namespace dlfp
