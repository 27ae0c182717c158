#pragma once

// Linear-rate constants and error bounds for the double-layer iteration.
//
// Under bounded linear regularity (constant kappa) and the proximity sandwich
//   delta d(x, C_i) <= p_i(x) <= Delta ||U_i x - x||,
// the iterates satisfy ||x^k - x^inf|| <= c q^k with
//   q = (1 - w- (2 - a+) (a-)^2 / (s a+) * (delta / (kappa Delta))^2)^(1/(2s)),
//   c = 2 d(x^0, C) / q^(s-1),
// and (delta / 2 kappa) ||x^k - x^inf|| <= max_i p_i(x^k) <= Delta c q^k.

#include "dlfp/reference.hpp"
#include "dlfp/rng.hpp"
#include "dlfp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dlfp {

enum class Provenance { ClosedForm, Empirical, Heuristic };

inline std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::ClosedForm: return "closed-form";
    case Provenance::Empirical: return "empirical";
    case Provenance::Heuristic: return "heuristic";
  }
  return "?";
}

struct RegularityConstants {
  double delta_r = 1.0;
  double Delta_r = 1.0;
  double kappa_r = 1.0;
  Provenance provenance = Provenance::ClosedForm;

  /// delta / (kappa Delta), the quantity every rate formula depends on.
  double ratio() const { return delta_r / (kappa_r * Delta_r); }

  void validate() const {
    if (!(delta_r > 0.0 && Delta_r > 0.0) || !std::isfinite(delta_r) || !std::isfinite(Delta_r)) {
      throw InvalidParameterError("RegularityConstants: delta and Delta must be positive");
    }
    if (!(kappa_r >= 1.0) || !std::isfinite(kappa_r)) {
      throw InvalidParameterError("RegularityConstants: kappa must be >= 1");
    }
    if (delta_r > Delta_r * kappa_r * (1.0 + 1e-15)) {
      throw InvalidParameterError("RegularityConstants: need delta <= Delta * kappa");
    }
  }
};

/// (min_i ||a_i||, max_i ||a_i||) for a linear system with rows a_i.
inline std::pair<double, double> linear_system_constants(const Matrix& A) {
  if (A.rows() == 0 || A.cols() == 0) throw InvalidProblemError("linear_system_constants: empty matrix");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double nr = A.row(i).norm();
    if (!(nr > 0.0)) throw InvalidProblemError("linear_system_constants: zero row " + std::to_string(i));
    lo = std::min(lo, nr);
    hi = std::max(hi, nr);
  }
  return {lo, hi};
}

inline double q_general(double omega_min, double alpha_min, double alpha_max, Index s,
                        const RegularityConstants& constants) {
  if (!(omega_min > 0.0 && omega_min <= 1.0)) throw InvalidParameterError("q_general: omega- must lie in (0,1]");
  if (!(alpha_min > 0.0 && alpha_min <= alpha_max && alpha_max < 2.0)) {
    throw InvalidParameterError("q_general: need 0 < alpha- <= alpha+ < 2");
  }
  if (s < 1) throw InvalidParameterError("q_general: s must be >= 1");
  constants.validate();
  const double r = constants.ratio();
  const double sd = static_cast<double>(s);
  const double radicand =
      1.0 - omega_min * (2.0 - alpha_max) * alpha_min * alpha_min / (sd * alpha_max) * r * r;
  return std::pow(std::max(radicand, 0.0), 1.0 / (2.0 * sd));
}

enum class Method { Cyclic, Simultaneous, Active, MaxProx, TopT, Threshold };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Cyclic: return "cyclic";
    case Method::Simultaneous: return "simultaneous";
    case Method::Active: return "active";
    case Method::MaxProx: return "maxprox";
    case Method::TopT: return "top_t";
    case Method::Threshold: return "threshold";
  }
  return "?";
}

inline Index block_count_for(Index m, Index b) { return (m + b - 1) / b; }

/// Number of blocks s used by a method (cyclic forces b = 1).
inline Index method_block_count(Method method, Index m, Index b) {
  return method == Method::Cyclic ? m : block_count_for(m, b);
}

/// Closed-form q for the methods with alpha = 1 and uniform weights over a
/// cyclic partition into s = ceil(m/b) blocks. When b does not divide m the
/// radicand uses the smallest block size, which only loosens the bound.
inline double q_method(Method method, Index m, Index b, Index t, const RegularityConstants& constants) {
  if (m < 1) throw InvalidParameterError("q_method: m must be >= 1");
  constants.validate();
  const double r2 = constants.ratio() * constants.ratio();
  const double md = static_cast<double>(m);
  if (method == Method::Cyclic) {
    return std::pow(std::max(1.0 - r2 / md, 0.0), 1.0 / (2.0 * md));
  }
  if (b < 1 || b > m) throw InvalidParameterError("q_method: need 1 <= b <= m");
  const Index s = block_count_for(m, b);
  const double b_eff = static_cast<double>(m - (s - 1) * b);
  const double root = 2.0 * static_cast<double>(s);
  double radicand = 1.0;
  switch (method) {
    case Method::Simultaneous:
    case Method::Active:
    case Method::Threshold:
      radicand = 1.0 - r2 / md;
      break;
    case Method::MaxProx:
      radicand = 1.0 - b_eff / md * r2;
      break;
    case Method::TopT:
      if (t < 1 || t > b) throw InvalidParameterError("q_method: top_t needs 1 <= t <= b");
      radicand = 1.0 - b_eff / (md * static_cast<double>(t)) * r2;
      break;
    case Method::Cyclic:
      break;
  }
  return std::pow(std::max(radicand, 0.0), 1.0 / root);
}

struct RateReport {
  Method method = Method::MaxProx;
  Index m = 0;
  Index b = 0;
  Index t = 0;
  Index s = 1;
  double omega_min = 1.0;
  double alpha_min = 1.0;
  double alpha_max = 1.0;
  double q_r = 0.0;
  double c_r = 0.0;
  double initial_distance = 0.0;
  bool distance_is_upper_bound = false;  // d(x0, C) replaced by ||x0 - witness||

  /// Delta c q^k, the predicted envelope of max_i p_i(x^k).
  double envelope(double Delta_r, std::uint64_t k) const {
    return Delta_r * c_r * std::pow(q_r, static_cast<double>(k));
  }
};

/// Smallest weight a method can assign (uniform weights, alpha = 1).
inline double method_omega_min(Method method, Index b, Index t) {
  switch (method) {
    case Method::Cyclic:
    case Method::MaxProx: return 1.0;
    case Method::TopT: return 1.0 / static_cast<double>(t);
    default: return 1.0 / static_cast<double>(b);
  }
}

inline RateReport make_rate_report(Method method, Index m, Index b, Index t,
                                   const RegularityConstants& constants, double initial_distance,
                                   bool distance_is_upper_bound = false) {
  if (!(initial_distance >= 0.0)) throw InvalidParameterError("make_rate_report: d(x0, C) must be >= 0");
  RateReport rep;
  rep.method = method;
  rep.m = m;
  rep.b = method == Method::Cyclic ? 1 : b;
  rep.t = t;
  rep.s = method_block_count(method, m, rep.b);
  rep.omega_min = method_omega_min(method, rep.b, t);
  rep.q_r = q_method(method, m, rep.b, t, constants);
  rep.c_r = 2.0 * initial_distance / std::pow(rep.q_r, static_cast<double>(rep.s - 1));
  rep.initial_distance = initial_distance;
  rep.distance_is_upper_bound = distance_is_upper_bound;
  return rep;
}

struct ErrorBound {
  double distance_to_limit;  // ||x^k - x^inf|| <= 2 kappa / delta * max_i p_i(x^k)
  double envelope;           // max_i p_i(x^k) <= Delta c q^k
};

inline ErrorBound error_bound(const RateReport& report, const RegularityConstants& constants,
                              std::uint64_t k, double observed_max_prox) {
  constants.validate();
  return {2.0 * constants.kappa_r / constants.delta_r * observed_max_prox,
          report.envelope(constants.Delta_r, k)};
}

/// Lower estimate of the bounded linear regularity constant over a ball:
/// max over infeasible samples x of d(x, C) / max_i d(x, C_i). Samples are
/// drawn from stream `seed`, so a larger sample_count extends the same set.
inline double estimate_kappa(std::span<const SimpleSet> sets, const Vector& center, double radius,
                             std::size_t sample_count, std::uint64_t seed,
                             const OracleOptions& opts = {}) {
  if (sets.empty()) throw InvalidProblemError("estimate_kappa: no sets");
  if (!(radius > 0.0)) throw InvalidParameterError("estimate_kappa: radius must be positive");
  Rng rng(seed);
  double best = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < sample_count; ++j) {
    const Vector x = rng.in_ball(center, radius);
    double worst_single = 0.0;
    for (const auto& s : sets) worst_single = std::max(worst_single, distance_to(s, x));
    if (worst_single <= 0.0) continue;
    any = true;
    const double d = nearest_point(sets, x, opts).distance;
    best = std::max(best, d / worst_single);
  }
  if (!any) throw InvalidParameterError("estimate_kappa: every sample was feasible; resample");
  return std::max(best, 1.0);
}

/// Empirical delta for a sublevel set: min over infeasible samples of
/// f_+(x) / d(x, S(f, 0)), where `shape` describes S(f, 0) exactly.
inline double estimate_sublevel_delta(const SublevelSet& f, const SimpleSet& shape, const Vector& center,
                                      double radius, std::size_t sample_count, std::uint64_t seed) {
  Rng rng(seed);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < sample_count; ++j) {
    const Vector x = rng.in_ball(center, radius);
    const double d = distance_to(shape, x);
    if (d <= 0.0) continue;
    best = std::min(best, f.proximity(x) / d);
  }
  if (!std::isfinite(best)) throw InvalidParameterError("estimate_sublevel_delta: every sample was feasible");
  return best;
}

/// exp(slope) of the least-squares line through (k, ln v_k) over the last
/// half of the positive entries of the series.
inline double fit_empirical_rate(std::span<const double> series) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series[k] > 0.0 && std::isfinite(series[k])) pts.emplace_back(static_cast<double>(k), std::log(series[k]));
  }
  if (pts.size() < 10) throw InvalidParameterError("fit_empirical_rate: need at least 10 positive records");
  const std::size_t start = pts.size() / 2;
  const auto n = static_cast<double>(pts.size() - start);
  double sx = 0.0, sy = 0.0;
  for (std::size_t j = start; j < pts.size(); ++j) {
    sx += pts[j].first;
    sy += pts[j].second;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t j = start; j < pts.size(); ++j) {
    sxx += (pts[j].first - mx) * (pts[j].first - mx);
    sxy += (pts[j].first - mx) * (pts[j].second - my);
  }
  return std::exp(sxy / sxx);
}

inline double fit_empirical_rate(const IterateTrace& trace) {
  std::vector<double> series(trace.records.size());
  for (std::size_t k = 0; k < trace.records.size(); ++k) series[k] = trace.records[k].max_prox_all;
  return fit_empirical_rate(series);
}

}  // namespace dlfp
