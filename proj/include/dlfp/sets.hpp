#pragma once

// Closed convex sets, their cutter operators and proximity functions.
//
// Every set type below models `CutterLike`: it exposes `apply(x)` (the cutter
// U with Fix U = C) and `proximity(x)` (a nonnegative functional vanishing
// exactly on C). The solver is templated on this concept, and `Cutter` erases
// the type when heterogeneous families have to live in one container.

#include "dlfp/core.hpp"

#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <type_traits>
#include <utility>

namespace dlfp {

inline constexpr double kDefaultMembershipTolerance = 1e-12;

template <class U>
concept CutterLike = requires(const U& u, const Vector& x) {
  { u.apply(x) } -> std::convertible_to<Vector>;
  { u.proximity(x) } -> std::convertible_to<double>;
  { u.tolerance() } -> std::convertible_to<double>;
};

/// Fixed point membership: proximity(x) within the set's tolerance.
template <CutterLike U>
bool contains(const U& u, const Vector& x) {
  return u.proximity(x) <= u.tolerance();
}

template <CutterLike U>
double proximity(const U& u, const Vector& x) {
  return u.proximity(x);
}

namespace detail {

inline double checked_sq_norm(const Vector& a, const char* what) {
  const double sq = a.squaredNorm();
  if (a.size() == 0 || !(sq > 0.0) || !std::isfinite(sq)) {
    throw InvalidSetError(std::string(what) + ": normal vector must be finite and nonzero");
  }
  return sq;
}

inline void check_tolerance(double tol) {
  if (!(tol >= 0.0)) throw InvalidSetError("membership tolerance must be nonnegative");
}

}  // namespace detail

/// {y : <a, y> <= b}
class HalfSpace {
 public:
  HalfSpace(Vector normal, double offset, double tol = kDefaultMembershipTolerance)
      : normal_(std::move(normal)),
        offset_(offset),
        sq_norm_(detail::checked_sq_norm(normal_, "HalfSpace")),
        tol_(tol) {
    detail::check_tolerance(tol);
  }

  const Vector& normal() const { return normal_; }
  double offset() const { return offset_; }
  double normal_sq_norm() const { return sq_norm_; }
  double tolerance() const { return tol_; }
  Index dim() const { return static_cast<Index>(normal_.size()); }

  double residual(const Vector& x) const {
    require_same_dim(normal_, x, "HalfSpace");
    return normal_.dot(x) - offset_;
  }
  double proximity(const Vector& x) const { return positive_part(residual(x)); }
  double distance(const Vector& x) const { return proximity(x) / std::sqrt(sq_norm_); }
  Vector apply(const Vector& x) const;

 private:
  Vector normal_;
  double offset_;
  double sq_norm_;
  double tol_;
};

/// {y : <a, y> = b}
class Hyperplane {
 public:
  Hyperplane(Vector normal, double offset, double tol = kDefaultMembershipTolerance)
      : normal_(std::move(normal)),
        offset_(offset),
        sq_norm_(detail::checked_sq_norm(normal_, "Hyperplane")),
        tol_(tol) {
    detail::check_tolerance(tol);
  }

  const Vector& normal() const { return normal_; }
  double offset() const { return offset_; }
  double normal_sq_norm() const { return sq_norm_; }
  double tolerance() const { return tol_; }
  Index dim() const { return static_cast<Index>(normal_.size()); }

  double residual(const Vector& x) const {
    require_same_dim(normal_, x, "Hyperplane");
    return normal_.dot(x) - offset_;
  }
  double proximity(const Vector& x) const { return std::abs(residual(x)); }
  double distance(const Vector& x) const { return proximity(x) / std::sqrt(sq_norm_); }
  Vector apply(const Vector& x) const;

 private:
  Vector normal_;
  double offset_;
  double sq_norm_;
  double tol_;
};

/// Closed Euclidean ball. Its proximity is the displacement of the metric
/// projection, i.e. the distance to the ball.
class Ball {
 public:
  Ball(Vector center, double radius, double tol = kDefaultMembershipTolerance)
      : center_(std::move(center)), radius_(radius), tol_(tol) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw InvalidSetError("Ball: radius must be positive and finite");
    }
    if (center_.size() == 0 || !center_.allFinite()) {
      throw InvalidSetError("Ball: center must be a finite nonempty vector");
    }
    detail::check_tolerance(tol);
  }

  const Vector& center() const { return center_; }
  double radius() const { return radius_; }
  double tolerance() const { return tol_; }
  Index dim() const { return static_cast<Index>(center_.size()); }

  double distance(const Vector& x) const {
    require_same_dim(center_, x, "Ball");
    return positive_part((x - center_).norm() - radius_);
  }
  double proximity(const Vector& x) const { return distance(x); }
  Vector apply(const Vector& x) const;

 private:
  Vector center_;
  double radius_;
  double tol_;
};

/// Value and one subgradient of a convex functional at a point.
struct SubgradientSample {
  double value;
  Vector subgradient;
};

/// S(f, 0) = {y : f(y) <= 0} for a caller-supplied convex f with a
/// deterministic subgradient oracle. Proximity is f_+.
class SublevelSet {
 public:
  using Oracle = std::function<SubgradientSample(const Vector&)>;

  explicit SublevelSet(Oracle f, bool nonempty_sublevel = true,
                       double tol = kDefaultMembershipTolerance)
      : f_(std::move(f)), nonempty_(nonempty_sublevel), tol_(tol) {
    if (!f_) throw InvalidSetError("SublevelSet: empty oracle");
    detail::check_tolerance(tol);
  }

  SubgradientSample evaluate(const Vector& x) const { return f_(x); }
  bool nonempty_sublevel() const { return nonempty_; }
  double tolerance() const { return tol_; }

  double proximity(const Vector& x) const { return positive_part(f_(x).value); }
  Vector apply(const Vector& x) const;

  /// f(x) = <a, x> - b
  static SublevelSet affine(Vector a, double b) {
    detail::checked_sq_norm(a, "SublevelSet::affine");
    return SublevelSet([a = std::move(a), b](const Vector& x) {
      require_same_dim(a, x, "SublevelSet::affine");
      return SubgradientSample{a.dot(x) - b, a};
    });
  }

  /// f(x) = ||x - c||^2 - r^2, gradient 2(x - c).
  static SublevelSet quadratic_ball(Vector c, double r) {
    if (!(r > 0.0)) throw InvalidSetError("SublevelSet::quadratic_ball: radius must be positive");
    return SublevelSet([c = std::move(c), r](const Vector& x) {
      require_same_dim(c, x, "SublevelSet::quadratic_ball");
      Vector d = x - c;
      return SubgradientSample{d.squaredNorm() - r * r, 2.0 * d};
    });
  }

  /// f(x) = ||x - c|| - r. At x = c (where f < 0) the zero subgradient is used.
  static SublevelSet norm_ball(Vector c, double r) {
    if (!(r > 0.0)) throw InvalidSetError("SublevelSet::norm_ball: radius must be positive");
    return SublevelSet([c = std::move(c), r](const Vector& x) {
      require_same_dim(c, x, "SublevelSet::norm_ball");
      Vector d = x - c;
      const double nd = d.norm();
      if (nd == 0.0) return SubgradientSample{-r, Vector::Zero(x.size())};
      return SubgradientSample{nd - r, d / nd};
    });
  }

  /// f(x) = max_i (<a_i, x> - b_i); ties resolved by the lowest row index.
  static SublevelSet max_affine(Matrix A, Vector b) {
    if (A.rows() == 0 || A.rows() != b.size()) {
      throw InvalidSetError("SublevelSet::max_affine: need matching nonempty A and b");
    }
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      detail::checked_sq_norm(Vector(A.row(i).transpose()), "SublevelSet::max_affine");
    }
    return SublevelSet([A = std::move(A), b = std::move(b)](const Vector& x) {
      if (A.cols() != x.size()) throw DimensionMismatchError("SublevelSet::max_affine");
      const Vector vals = A * x - b;
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < vals.size(); ++i) {
        if (vals(i) > vals(best)) best = i;
      }
      return SubgradientSample{vals(best), A.row(best).transpose()};
    });
  }

 private:
  Oracle f_;
  bool nonempty_;
  double tol_;
};

// x - (<a,x> - b)_+ / ||a||^2 * a
inline Vector project_halfspace(const HalfSpace& h, const Vector& x) {
  const double r = h.residual(x);
  if (r <= 0.0) return x;
  return x - (r / h.normal_sq_norm()) * h.normal();
}

inline Vector project_hyperplane(const Hyperplane& h, const Vector& x) {
  const double r = h.residual(x);
  return x - (r / h.normal_sq_norm()) * h.normal();
}

inline Vector project_ball(const Ball& ball, const Vector& x) {
  require_same_dim(ball.center(), x, "Ball");
  Vector d = x - ball.center();
  const double nd = d.norm();
  if (nd <= ball.radius()) return x;
  return ball.center() + (ball.radius() / nd) * d;
}

/// x - f_+(x) / ||g||^2 * g for g in the subdifferential of f at x.
inline Vector subgradient_project(const SublevelSet& s, const Vector& x) {
  SubgradientSample sample = s.evaluate(x);
  if (!(sample.value > 0.0)) return x;
  require_same_dim(sample.subgradient, x, "SublevelSet subgradient");
  const double gg = sample.subgradient.squaredNorm();
  if (!(gg > 0.0)) {
    throw OracleContractError("subgradient_project: zero subgradient where f(x) > 0");
  }
  return x - (sample.value / gg) * sample.subgradient;
}

inline Vector HalfSpace::apply(const Vector& x) const { return project_halfspace(*this, x); }
inline Vector Hyperplane::apply(const Vector& x) const { return project_hyperplane(*this, x); }
inline Vector Ball::apply(const Vector& x) const { return project_ball(*this, x); }
inline Vector SublevelSet::apply(const Vector& x) const { return subgradient_project(*this, x); }

/// Type-erased cutter: an operator together with its proximity function.
class Cutter {
 public:
  using Map = std::function<Vector(const Vector&)>;
  using Proximity = std::function<double(const Vector&)>;

  Cutter(Map apply, Proximity prox, double tol = kDefaultMembershipTolerance)
      : apply_(std::move(apply)), prox_(std::move(prox)), tol_(tol) {
    if (!apply_ || !prox_) throw InvalidSetError("Cutter: empty operator or proximity");
    detail::check_tolerance(tol);
  }

  template <CutterLike U>
    requires(!std::same_as<std::remove_cvref_t<U>, Cutter>)
  explicit Cutter(U u)
      : Cutter(
            [u](const Vector& x) { return Vector(u.apply(x)); },
            [u](const Vector& x) { return static_cast<double>(u.proximity(x)); }, u.tolerance()) {}

  /// Generic cutter whose proximity is the displacement ||Ux - x||.
  static Cutter from_operator(Map apply, double tol = kDefaultMembershipTolerance) {
    Map op = apply;
    return Cutter(
        std::move(apply), [op = std::move(op)](const Vector& x) { return (op(x) - x).norm(); },
        tol);
  }

  Vector apply(const Vector& x) const { return apply_(x); }
  double proximity(const Vector& x) const { return prox_(x); }
  double tolerance() const { return tol_; }

 private:
  Map apply_;
  Proximity prox_;
  double tol_;
};

/// Id + alpha (U - Id). Same fixed points and proximity as U; the result is
/// (2 - alpha)/alpha strongly quasi-nonexpansive for alpha in (0, 2).
template <CutterLike U>
Cutter relax(const U& u, double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw InvalidParameterError("relax: alpha must lie in (0, 2]");
  }
  if constexpr (std::same_as<U, Cutter>) {
    if (alpha == 1.0) return u;
  }
  return Cutter(
      [u, alpha](const Vector& x) {
        if (alpha == 1.0) return Vector(u.apply(x));
        return Vector(x + alpha * (Vector(u.apply(x)) - x));
      },
      [u](const Vector& x) { return static_cast<double>(u.proximity(x)); }, u.tolerance());
}

/// Cutter with the same fixed points as an eta-averaged operator V:
/// U = Id + (V - Id) / (2 eta).
inline Cutter cutter_from_averaged(Cutter::Map averaged, double eta,
                                   double tol = kDefaultMembershipTolerance) {
  if (!averaged) throw InvalidSetError("cutter_from_averaged: empty operator");
  if (!(eta > 0.0 && eta < 1.0)) {
    throw InvalidParameterError("cutter_from_averaged: eta must lie in (0, 1)");
  }
  const double scale = 1.0 / (2.0 * eta);
  return Cutter::from_operator(
      [v = std::move(averaged), scale](const Vector& x) { return Vector(x + scale * (v(x) - x)); },
      tol);
}

}  // namespace dlfp
