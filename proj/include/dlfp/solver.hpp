#pragma once

// The double-layer fixed point iteration
//
//   x^{k+1} = x^k + alpha_k ( sum_{i in I_k} w_i^k U_i x^k - x^k ),
//   I_k ⊆ J_k ⊆ I,
//
// with J_k from an outer schedule and I_k from an inner strategy, plus the
// lopping-and-flagging run mode and Fejér monotonicity diagnostics.

#include "dlfp/controls.hpp"
#include "dlfp/sets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dlfp {

/// Relaxation parameter alpha_k as a pure function of k, confined to
/// [lower, upper] ⊂ (0, 2).
class AlphaPolicy {
 public:
  static AlphaPolicy constant(double alpha) {
    return AlphaPolicy(alpha, alpha, [alpha](std::uint64_t) { return alpha; });
  }
  static AlphaPolicy schedule(double lower, double upper, std::function<double(std::uint64_t)> fn) {
    return AlphaPolicy(lower, upper, std::move(fn));
  }

  double lower() const { return lower_; }
  double upper() const { return upper_; }

  double at(std::uint64_t k) const {
    const double a = fn_(k);
    if (!(a >= lower_ && a <= upper_)) {
      throw InvalidParameterError("AlphaPolicy: alpha_k left its declared range");
    }
    return a;
  }

 private:
  AlphaPolicy(double lower, double upper, std::function<double(std::uint64_t)> fn)
      : lower_(lower), upper_(upper), fn_(std::move(fn)) {
    if (!(lower > 0.0 && lower <= upper && upper < 2.0)) {
      throw InvalidParameterError("AlphaPolicy: need 0 < alpha- <= alpha+ < 2");
    }
    if (!fn_) throw InvalidParameterError("AlphaPolicy: empty schedule");
  }

  double lower_;
  double upper_;
  std::function<double(std::uint64_t)> fn_;
};

/// Convex weights over the selected set I_k. Either uniform 1/|I_k| or a
/// caller-supplied function of (k, I_k).
class WeightPolicy {
 public:
  using Fn = std::function<std::vector<double>(std::uint64_t, const IndexSet&)>;

  static WeightPolicy uniform() { return WeightPolicy(); }
  static WeightPolicy custom(Fn fn, double lower_bound) {
    if (!fn) throw InvalidParameterError("WeightPolicy: empty function");
    if (!(lower_bound > 0.0 && lower_bound <= 1.0)) {
      throw InvalidParameterError("WeightPolicy: omega- must lie in (0, 1]");
    }
    WeightPolicy w;
    w.fn_ = std::move(fn);
    w.lower_ = lower_bound;
    return w;
  }

  bool is_uniform() const { return !fn_; }

  std::vector<double> weights(std::uint64_t k, const IndexSet& selected) const {
    if (selected.empty()) return {};
    if (!fn_) return std::vector<double>(selected.size(), 1.0 / static_cast<double>(selected.size()));
    std::vector<double> w = fn_(k, selected);
    if (w.size() != selected.size()) throw InvalidParameterError("WeightPolicy: wrong weight count");
    double sum = 0.0;
    for (double v : w) {
      if (!(v >= lower_ && v <= 1.0)) throw InvalidParameterError("WeightPolicy: weight outside [omega-, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidParameterError("WeightPolicy: weights must sum to 1");
    return w;
  }

 private:
  Fn fn_;
  double lower_ = 0.0;
};

struct StoppingRule {
  double epsilon = 1e-6;
  std::uint64_t check_every = 100;
  std::uint64_t max_iters = 5000;
};

struct SolverConfig {
  AlphaPolicy alpha = AlphaPolicy::constant(1.0);
  WeightPolicy weights = WeightPolicy::uniform();
  StoppingRule stopping{};
  bool record_iterates = false;   // keep x^k for every k
  bool record_selection = false;  // keep I_k for every k
  double divergence_bound = 1e12;
};

enum class RunStatus { Converged, MaxIters, LoppingCertified, NumericalFailure };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxIters: return "max-iters";
    case RunStatus::LoppingCertified: return "lopping-certified";
    case RunStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

/// Metrics of iterate x^k and of the step taken from it. The final record
/// of a run carries no step (step_norm 0, inner_size 0).
struct IterateRecord {
  std::uint64_t k = 0;
  double max_prox_all = 0.0;
  double max_prox_block = 0.0;
  double step_norm = 0.0;
  double dist_witness = std::numeric_limits<double>::quiet_NaN();
  Index block_id = 0;
  Index inner_size = 0;
  bool computed = false;  // false for lopped steps and the final record
};

struct IterateTrace {
  std::vector<IterateRecord> records;
  std::vector<Vector> iterates;    // only with record_iterates
  std::vector<IndexSet> selected;  // only with record_selection
  RunStatus status = RunStatus::MaxIters;
  Vector final_point;

  std::size_t size() const { return records.size(); }
  std::uint64_t final_iteration() const { return records.empty() ? 0 : records.back().k; }
};

struct StepResult {
  Vector x;
  IndexSet selected;
  double block_max_prox = 0.0;
};

namespace detail {

template <CutterLike U>
void validate_family(std::span<const U> cutters, const OuterSchedule& sched) {
  if (cutters.empty()) throw InvalidProblemError("solver: empty cutter family");
  if (sched.universe() != cutters.size()) {
    throw InvalidControlError("solver: schedule index set does not match the number of cutters");
  }
}

template <CutterLike U>
double max_proximity(std::span<const U> cutters, const Vector& x, std::vector<double>& prox) {
  prox.resize(cutters.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < cutters.size(); ++i) {
    prox[i] = cutters[i].proximity(x);
    worst = std::max(worst, prox[i]);
  }
  return worst;
}

// Block-local proximity vector, selection and combination. `prox_all` holds
// the proximities of every cutter at x.
template <CutterLike U>
StepResult step_from_prox(const Vector& x, std::span<const U> cutters, std::span<const Index> block,
                          std::span<const double> prox_all, const InnerStrategy& strategy, double alpha,
                          const WeightPolicy& weights, std::uint64_t k) {
  std::vector<double> prox(block.size());
  double pmax = 0.0;
  for (std::size_t j = 0; j < block.size(); ++j) {
    if (block[j] >= cutters.size()) throw InvalidControlError("step: block index out of range");
    prox[j] = prox_all[block[j]];
    pmax = std::max(pmax, prox[j]);
  }
  StepResult out{x, inner_select(strategy, block, prox), pmax};
  if (out.selected.empty()) return out;  // degenerate Active selection: identity step

  const std::vector<double> w = weights.weights(k, out.selected);
  // Ascending index order, single accumulation pass.
  Vector combo = Vector::Zero(x.size());
  for (std::size_t j = 0; j < out.selected.size(); ++j) {
    const Vector ux = cutters[out.selected[j]].apply(x);
    if (ux.size() != x.size()) throw DimensionMismatchError("step: cutter output dimension");
    combo += w[j] * ux;
  }
  // alpha = 1 returns the combination itself so that e.g. a single selected
  // projection reproduces P x bit for bit.
  if (alpha == 1.0) {
    out.x = std::move(combo);
  } else {
    out.x = x + alpha * (combo - x);
  }
  return out;
}

inline bool diverged(const Vector& x, double bound) { return !x.allFinite() || x.norm() > bound; }

}  // namespace detail

/// One double-layer step from x over the outer block J.
template <CutterLike U>
StepResult step(const Vector& x, std::span<const U> cutters, std::span<const Index> block,
                const InnerStrategy& strategy, double alpha,
                const WeightPolicy& weights = WeightPolicy::uniform(), std::uint64_t k = 0) {
  if (block.empty()) throw InvalidControlError("step: empty outer block");
  if (!(alpha > 0.0 && alpha < 2.0)) throw InvalidParameterError("step: alpha must lie in (0, 2)");
  std::vector<double> prox_all(cutters.size(), 0.0);
  for (Index i : block) {
    if (i >= cutters.size()) throw InvalidControlError("step: block index out of range");
    prox_all[i] = cutters[i].proximity(x);
  }
  return detail::step_from_prox(x, cutters, block, prox_all, strategy, alpha, weights, k);
}

/// Runs the iteration with J_k = outer_block(k). Global max proximity is
/// recorded every iteration; the stopping test max_i p_i(x^k) <= epsilon is
/// only applied when k is a multiple of check_every.
template <CutterLike U>
IterateTrace run(const Vector& x0, std::span<const U> cutters, const OuterSchedule& sched,
                 const InnerStrategy& strategy, const SolverConfig& config,
                 const std::optional<Vector>& witness = std::nullopt) {
  detail::validate_family(cutters, sched);
  verify_intermittent(sched);
  if (config.stopping.check_every == 0) throw InvalidParameterError("run: check_every must be positive");
  if (witness) require_same_dim(x0, *witness, "run: witness");

  IterateTrace trace;
  trace.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(config.stopping.max_iters + 1, 1u << 16)));
  std::vector<double> prox;
  Vector x = x0;
  for (std::uint64_t k = 0;; ++k) {
    IterateRecord rec;
    rec.k = k;
    rec.max_prox_all = detail::max_proximity(cutters, x, prox);
    if (witness) rec.dist_witness = (x - *witness).norm();
    rec.block_id = outer_block_id(sched, k);
    if (config.record_iterates) trace.iterates.push_back(x);

    if (detail::diverged(x, config.divergence_bound) || std::isnan(rec.max_prox_all)) {
      trace.records.push_back(rec);
      if (config.record_selection) trace.selected.emplace_back();
      trace.status = RunStatus::NumericalFailure;
      break;
    }
    const bool converged = k % config.stopping.check_every == 0 && rec.max_prox_all <= config.stopping.epsilon;
    if (converged || k >= config.stopping.max_iters) {
      const auto& blk = sched.block(rec.block_id);
      for (Index i : blk) rec.max_prox_block = std::max(rec.max_prox_block, prox[i]);
      trace.records.push_back(rec);
      if (config.record_selection) trace.selected.emplace_back();
      trace.status = converged ? RunStatus::Converged : RunStatus::MaxIters;
      break;
    }

    StepResult st = detail::step_from_prox(x, cutters, std::span<const Index>(sched.block(rec.block_id)),
                                           prox, strategy, config.alpha.at(k), config.weights, k);
    rec.max_prox_block = st.block_max_prox;
    rec.step_norm = (st.x - x).norm();
    rec.inner_size = st.selected.size();
    rec.computed = true;
    trace.records.push_back(rec);
    if (config.record_selection) trace.selected.push_back(std::move(st.selected));
    x = std::move(st.x);
  }
  trace.final_point = x;
  return trace;
}

/// Lopping and flagging: a block whose max proximity is <= epsilon is skipped
/// (x^{k+1} = x^k) and flagged for its next N turns; after s consecutive
/// skips every block has been certified at the current point and the run
/// stops with status LoppingCertified.
template <CutterLike U>
IterateTrace run_lopping(const Vector& x0, std::span<const U> cutters, const OuterSchedule& sched,
                         const InnerStrategy& strategy, const SolverConfig& config, Index flag_horizon,
                         const std::optional<Vector>& witness = std::nullopt) {
  detail::validate_family(cutters, sched);
  verify_intermittent(sched);
  if (witness) require_same_dim(x0, *witness, "run_lopping: witness");

  FlagState state(sched.block_count(), flag_horizon, config.stopping.epsilon);
  IterateTrace trace;
  std::vector<double> prox;
  Vector x = x0;
  for (std::uint64_t k = 0;; ++k) {
    IterateRecord rec;
    rec.k = k;
    rec.max_prox_all = detail::max_proximity(cutters, x, prox);
    if (witness) rec.dist_witness = (x - *witness).norm();
    if (config.record_iterates) trace.iterates.push_back(x);

    if (detail::diverged(x, config.divergence_bound) || std::isnan(rec.max_prox_all)) {
      trace.records.push_back(rec);
      if (config.record_selection) trace.selected.emplace_back();
      trace.status = RunStatus::NumericalFailure;
      break;
    }
    if (k >= config.stopping.max_iters) {
      trace.records.push_back(rec);
      if (config.record_selection) trace.selected.emplace_back();
      trace.status = RunStatus::MaxIters;
      break;
    }

    const Index blk = select_next_block(state, sched);
    const auto& block = sched.block(blk);
    double block_max = 0.0;
    for (Index i : block) block_max = std::max(block_max, prox[i]);
    const LoppingDecision decision = record_visit(state, sched, blk, block_max);
    rec.block_id = blk;
    rec.max_prox_block = block_max;

    if (!decision.compute) {
      trace.records.push_back(rec);
      if (config.record_selection) trace.selected.emplace_back();
      if (decision.stop) {
        trace.status = RunStatus::LoppingCertified;
        break;
      }
      continue;
    }

    StepResult st = detail::step_from_prox(x, cutters, std::span<const Index>(block), prox, strategy,
                                           config.alpha.at(k), config.weights, k);
    rec.step_norm = (st.x - x).norm();
    rec.inner_size = st.selected.size();
    rec.computed = true;
    trace.records.push_back(rec);
    if (config.record_selection) trace.selected.push_back(std::move(st.selected));
    x = std::move(st.x);
  }
  trace.final_point = x;
  return trace;
}

/// max_k (||x^{k+1} - z|| - ||x^k - z||) over a trace recorded with iterates.
/// z must be a common fixed point of the family.
template <CutterLike U>
double fejer_check(const IterateTrace& trace, const Vector& z, std::span<const U> cutters) {
  for (const auto& c : cutters) {
    if (!contains(c, z)) throw InvalidProblemError("fejer_check: reference point is not feasible");
  }
  if (trace.iterates.size() != trace.records.size()) {
    throw InvalidParameterError("fejer_check: trace was recorded without iterates");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < trace.iterates.size(); ++k) {
    require_same_dim(trace.iterates[k], z, "fejer_check");
    worst = std::max(worst, (trace.iterates[k + 1] - z).norm() - (trace.iterates[k] - z).norm());
  }
  return worst;
}

/// Same diagnostic computed from the recorded witness distances.
inline double fejer_check_witness(const IterateTrace& trace) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    worst = std::max(worst, trace.records[k + 1].dist_witness - trace.records[k].dist_witness);
  }
  return worst;
}

/// max_k ( ||x^{k+1}-z||^2 - ||x^k-z||^2 + rho ||x^{k+1}-x^k||^2 ); nonpositive
/// (up to rounding) when every step operator is rho-SQNE.
inline double sqne_violation(const IterateTrace& trace, const Vector& z, double rho) {
  if (trace.iterates.size() != trace.records.size()) {
    throw InvalidParameterError("sqne_violation: trace was recorded without iterates");
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < trace.iterates.size(); ++k) {
    const double v = (trace.iterates[k + 1] - z).squaredNorm() - (trace.iterates[k] - z).squaredNorm() +
                     rho * (trace.iterates[k + 1] - trace.iterates[k]).squaredNorm();
    worst = std::max(worst, v);
  }
  return trace.iterates.size() < 2 ? 0.0 : worst;
}

}  // namespace dlfp
