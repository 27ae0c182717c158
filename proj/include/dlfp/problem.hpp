#pragma once

// Random consistent test problems.
//
// Linear inequalities A x <= b are generated around a witness z*:
//   z* ~ N(0, I), a_i ~ N(0, I), b_i = <a_i, z*> + u_i with u_i ~ U[0, 1],
//   x0 = z* + 10 d with d uniform on the unit sphere (redrawn while feasible).
// The positive slacks give z* a neighbourhood inside C, so the family is
// boundedly linearly regular. All draws come from the portable `Rng`.

#include "dlfp/reference.hpp"
#include "dlfp/rng.hpp"
#include "dlfp/sets.hpp"

#include <cstdint>
#include <vector>

namespace dlfp {

inline constexpr double kStartRadius = 10.0;

struct ProblemInstance {
  Matrix A;
  Vector b;
  Vector witness;
  Vector x0;
  std::uint64_t seed = 0;

  Index rows() const { return static_cast<Index>(A.rows()); }
  Index dim() const { return static_cast<Index>(A.cols()); }

  void validate() const {
    if (A.rows() == 0 || A.cols() == 0) throw InvalidProblemError("ProblemInstance: empty matrix");
    if (b.size() != A.rows() || witness.size() != A.cols() || x0.size() != A.cols()) {
      throw InvalidProblemError("ProblemInstance: inconsistent sizes");
    }
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (!(A.row(i).squaredNorm() > 0.0)) throw InvalidProblemError("ProblemInstance: zero row");
    }
  }

  /// max_i (<a_i, x> - b_i)_+
  double max_violation(const Vector& x) const {
    return std::max(0.0, (A * x - b).maxCoeff());
  }
};

inline std::vector<HalfSpace> halfspaces(const ProblemInstance& p) {
  p.validate();
  std::vector<HalfSpace> out;
  out.reserve(p.rows());
  for (Eigen::Index i = 0; i < p.A.rows(); ++i) out.emplace_back(p.A.row(i).transpose(), p.b(i));
  return out;
}

inline std::vector<Hyperplane> hyperplanes(const ProblemInstance& p) {
  p.validate();
  std::vector<Hyperplane> out;
  out.reserve(p.rows());
  for (Eigen::Index i = 0; i < p.A.rows(); ++i) out.emplace_back(p.A.row(i).transpose(), p.b(i));
  return out;
}

template <class Set>
std::vector<SimpleSet> as_simple_sets(const std::vector<Set>& sets) {
  return std::vector<SimpleSet>(sets.begin(), sets.end());
}

namespace detail {

inline ProblemInstance draw_system(Index m, Index n, std::uint64_t seed, bool equality) {
  if (m < 1 || n < 1) throw InvalidParameterError("generate_problem: m and n must be >= 1");
  Rng rng(seed);
  ProblemInstance p;
  p.seed = seed;
  const auto mi = static_cast<Eigen::Index>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  p.witness = rng.normal_vector(ni);
  p.A.resize(mi, ni);
  for (Eigen::Index i = 0; i < mi; ++i) {
    do {
      for (Eigen::Index j = 0; j < ni; ++j) p.A(i, j) = rng.normal();
    } while (!(p.A.row(i).squaredNorm() > 0.0));
  }
  p.b = p.A * p.witness;
  if (!equality) {
    for (Eigen::Index i = 0; i < mi; ++i) p.b(i) += rng.uniform();
  }
  do {
    p.x0 = p.witness + kStartRadius * rng.unit_vector(ni);
  } while (equality ? (p.A * p.x0 - p.b).cwiseAbs().maxCoeff() <= 0.0 : p.max_violation(p.x0) <= 0.0);
  return p;
}

}  // namespace detail

/// Consistent system A x <= b (see the header comment for the recipe).
inline ProblemInstance generate_problem(Index m, Index n, std::uint64_t seed) {
  return detail::draw_system(m, n, seed, false);
}

/// Consistent equality system A x = b with b = A z*.
inline ProblemInstance generate_equality_problem(Index m, Index n, std::uint64_t seed) {
  return detail::draw_system(m, n, seed, true);
}

/// Half-spaces plus quadratic sublevel sets f_j(x) = ||x - c_j||^2 - r_j^2,
/// all containing a common witness with positive margin.
struct MixedProblem {
  std::vector<HalfSpace> halfspaces;
  std::vector<Ball> balls;  // S(f_j, 0) as metric balls
  Vector witness;
  Vector x0;
  std::uint64_t seed = 0;

  std::vector<SublevelSet> quadratic_sets() const {
    std::vector<SublevelSet> out;
    for (const auto& bl : balls) out.push_back(SublevelSet::quadratic_ball(bl.center(), bl.radius()));
    return out;
  }

  /// Cutter family: half-spaces first (metric projections), then quadratic
  /// balls (subgradient projections, proximity f_+).
  std::vector<Cutter> subgradient_family() const {
    std::vector<Cutter> out;
    for (const auto& h : halfspaces) out.emplace_back(h);
    for (const auto& q : quadratic_sets()) out.emplace_back(q);
    return out;
  }
};

inline MixedProblem generate_mixed_problem(Index halfspace_count, Index ball_count, Index n,
                                           std::uint64_t seed) {
  if (n < 1 || halfspace_count + ball_count < 1) throw InvalidParameterError("generate_mixed_problem");
  Rng rng(seed);
  MixedProblem p;
  p.seed = seed;
  const auto ni = static_cast<Eigen::Index>(n);
  p.witness = rng.normal_vector(ni);
  for (Index i = 0; i < halfspace_count; ++i) {
    Vector a = rng.normal_vector(ni);
    p.halfspaces.emplace_back(a, a.dot(p.witness) + rng.uniform());
  }
  for (Index j = 0; j < ball_count; ++j) {
    // Centre at distance ~U[1, 4] from the witness, radius leaving a margin
    // of U[0.5, 1.5] around it.
    const Vector c = p.witness + rng.uniform(1.0, 4.0) * rng.unit_vector(ni);
    const double r = (c - p.witness).norm() + rng.uniform(0.5, 1.5);
    p.balls.emplace_back(c, r);
  }
  auto infeasible = [&](const Vector& x) {
    for (const auto& h : p.halfspaces) {
      if (h.proximity(x) > 0.0) return true;
    }
    for (const auto& bl : p.balls) {
      if (bl.proximity(x) > 0.0) return true;
    }
    return false;
  };
  do {
    p.x0 = p.witness + kStartRadius * rng.unit_vector(ni);
  } while (!infeasible(p.x0));
  return p;
}

}  // namespace dlfp
