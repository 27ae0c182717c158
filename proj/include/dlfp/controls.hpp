#pragma once

// Outer (block) and inner (proximity driven) controls, the control
// compatibility checks, and the lopping-and-flagging block scheduler.

#include "dlfp/core.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dlfp {

/// Cyclic sequence of index blocks J_1, ..., J_s over I = {0, ..., m-1}.
/// Blocks may overlap and need not cover I; `verify_intermittent` decides
/// whether the schedule is admissible.
class OuterSchedule {
 public:
  OuterSchedule(std::vector<IndexSet> blocks, Index universe)
      : blocks_(std::move(blocks)), universe_(universe) {
    if (blocks_.empty()) throw InvalidControlError("OuterSchedule: need at least one block");
    if (universe_ == 0) throw InvalidControlError("OuterSchedule: empty index set");
    for (auto& b : blocks_) {
      if (b.empty()) throw InvalidControlError("OuterSchedule: empty block");
      std::sort(b.begin(), b.end());
      if (std::adjacent_find(b.begin(), b.end()) != b.end()) {
        throw InvalidControlError("OuterSchedule: duplicate index inside a block");
      }
      if (b.back() >= universe_) throw InvalidControlError("OuterSchedule: index out of range");
    }
  }

  /// ceil(m / b) contiguous blocks of size b; the last one may be smaller.
  static OuterSchedule contiguous(Index m, Index block_size) {
    if (m == 0 || block_size == 0) {
      throw InvalidControlError("OuterSchedule::contiguous: m and block size must be positive");
    }
    std::vector<IndexSet> blocks;
    for (Index start = 0; start < m; start += block_size) {
      IndexSet blk(std::min(block_size, m - start));
      std::iota(blk.begin(), blk.end(), start);
      blocks.push_back(std::move(blk));
    }
    return OuterSchedule(std::move(blocks), m);
  }

  Index block_count() const { return blocks_.size(); }
  Index universe() const { return universe_; }
  const IndexSet& block(Index j) const { return blocks_.at(j); }
  const std::vector<IndexSet>& blocks() const { return blocks_; }

  Index max_block_size() const {
    Index r = 0;
    for (const auto& b : blocks_) r = std::max(r, b.size());
    return r;
  }
  Index min_block_size() const {
    Index r = blocks_.front().size();
    for (const auto& b : blocks_) r = std::min(r, b.size());
    return r;
  }

  bool is_partition() const {
    std::vector<int> hits(universe_, 0);
    for (const auto& b : blocks_) {
      for (Index i : b) ++hits[i];
    }
    return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
  }

 private:
  std::vector<IndexSet> blocks_;
  Index universe_;
};

/// Position of block J_{(k mod s)+1} (zero based).
inline Index outer_block_id(const OuterSchedule& sched, std::uint64_t k) {
  return static_cast<Index>(k % sched.block_count());
}

inline const IndexSet& outer_block(const OuterSchedule& sched, std::uint64_t k) {
  return sched.block(outer_block_id(sched, k));
}

/// Smallest w such that every window of w consecutive blocks of the cyclic
/// schedule covers I.
inline Index verify_intermittent(const OuterSchedule& sched) {
  const Index s = sched.block_count();
  const Index m = sched.universe();
  for (Index w = 1; w <= s; ++w) {
    bool all_windows = true;
    for (Index start = 0; start < s && all_windows; ++start) {
      std::vector<bool> covered(m, false);
      Index count = 0;
      for (Index j = 0; j < w; ++j) {
        for (Index i : sched.block((start + j) % s)) {
          if (!covered[i]) {
            covered[i] = true;
            ++count;
          }
        }
      }
      all_windows = count == m;
    }
    if (all_windows) return w;
  }
  throw InvalidControlError("verify_intermittent: the schedule never covers every index");
}

/// Inner control: which members of the current outer block enter the step.
struct InnerStrategy {
  enum class Kind { All, Active, MaxProx, TopT, Threshold };

  Kind kind = Kind::All;
  Index top = 1;           // TopT only
  double threshold = 0.0;  // Threshold only

  static InnerStrategy all() { return {Kind::All, 1, 0.0}; }
  static InnerStrategy active() { return {Kind::Active, 1, 0.0}; }
  static InnerStrategy max_prox() { return {Kind::MaxProx, 1, 0.0}; }
  static InnerStrategy top_t(Index t) {
    if (t == 0) throw InvalidControlError("InnerStrategy: top-t needs t >= 1");
    return {Kind::TopT, t, 0.0};
  }
  static InnerStrategy threshold_t(double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidControlError("InnerStrategy: threshold must be in [0,1]");
    return {Kind::Threshold, 1, t};
  }

  /// Parses `all|active|maxprox|top:<t>|threshold:<t>`.
  static InnerStrategy parse(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view head = text.substr(0, colon);
    const std::string arg = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
    auto need_arg = [&] {
      if (arg.empty()) throw InvalidControlError("InnerStrategy: missing argument in '" + std::string(text) + "'");
    };
    try {
      if (head == "all" && arg.empty()) return all();
      if (head == "active" && arg.empty()) return active();
      if (head == "maxprox" && arg.empty()) return max_prox();
      if (head == "top") {
        need_arg();
        std::size_t used = 0;
        const long long t = std::stoll(arg, &used);
        if (used != arg.size() || t < 1) throw InvalidControlError("InnerStrategy: bad top-t value");
        return top_t(static_cast<Index>(t));
      }
      if (head == "threshold") {
        need_arg();
        std::size_t used = 0;
        const double t = std::stod(arg, &used);
        if (used != arg.size()) throw InvalidControlError("InnerStrategy: bad threshold value");
        return threshold_t(t);
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const InvalidControlError*>(&e) != nullptr) throw;
      throw InvalidControlError("InnerStrategy: cannot parse '" + std::string(text) + "'");
    }
    throw InvalidControlError("InnerStrategy: unknown strategy '" + std::string(text) + "'");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::All: return "all";
      case Kind::Active: return "active";
      case Kind::MaxProx: return "maxprox";
      case Kind::TopT: return "top:" + std::to_string(top);
      case Kind::Threshold: {
        std::string s = std::to_string(threshold);
        while (s.size() > 1 && s.back() == '0') s.pop_back();
        if (s.back() == '.') s.push_back('0');
        return "threshold:" + s;
      }
    }
    return "?";
  }

  friend bool operator==(const InnerStrategy&, const InnerStrategy&) = default;
};

/// Selects I_k from the block. `prox[j]` is the proximity of `block[j]`.
/// The result is sorted ascending; ties always go to the lowest index.
inline IndexSet inner_select(const InnerStrategy& strategy, std::span<const Index> block,
                             std::span<const double> prox) {
  if (block.empty()) throw InvalidControlError("inner_select: empty block");
  if (prox.size() != block.size()) throw DimensionMismatchError("inner_select: prox/block size");

  std::size_t arg = 0;
  for (std::size_t j = 1; j < block.size(); ++j) {
    if (prox[j] > prox[arg] || (prox[j] == prox[arg] && block[j] < block[arg])) arg = j;
  }
  const double pmax = prox[arg];

  IndexSet out;
  switch (strategy.kind) {
    case InnerStrategy::Kind::All:
      out.assign(block.begin(), block.end());
      break;
    case InnerStrategy::Kind::Active:
      for (std::size_t j = 0; j < block.size(); ++j) {
        if (prox[j] > 0.0) out.push_back(block[j]);
      }
      break;
    case InnerStrategy::Kind::MaxProx:
      out.push_back(block[arg]);
      break;
    case InnerStrategy::Kind::TopT: {
      std::vector<std::size_t> order(block.size());
      std::iota(order.begin(), order.end(), 0);
      const std::size_t t = std::min<std::size_t>(strategy.top, block.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(t), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          if (prox[a] != prox[b]) return prox[a] > prox[b];
                          return block[a] < block[b];
                        });
      for (std::size_t j = 0; j < t; ++j) out.push_back(block[order[j]]);
      break;
    }
    case InnerStrategy::Kind::Threshold: {
      const double cut = strategy.threshold * pmax;
      for (std::size_t j = 0; j < block.size(); ++j) {
        if (prox[j] >= cut) out.push_back(block[j]);
      }
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// I_k ∩ Argmax_{j in J_k} p_j(x^k) ≠ ∅. Argmax uses exact equality.
inline bool verify_argmax_condition(std::span<const Index> inner, std::span<const Index> block,
                                    std::span<const double> prox) {
  if (prox.size() != block.size()) throw DimensionMismatchError("verify_argmax_condition");
  if (block.empty()) return false;
  const double pmax = *std::max_element(prox.begin(), prox.end());
  for (std::size_t j = 0; j < block.size(); ++j) {
    if (prox[j] == pmax && std::find(inner.begin(), inner.end(), block[j]) != inner.end()) {
      return true;
    }
  }
  return false;
}

/// Bookkeeping of the lopping-and-flagging scheduler. A skipped block is
/// flagged for its next `flag_horizon` cyclic turns: each time its turn comes
/// up while flagged the counter is decremented and the block is passed over.
struct FlagState {
  std::vector<Index> remaining_skips;  // per block; 0 means available
  Index last_used;                     // last visited block; starts as s-1 so block 0 comes first
  Index consecutive_skips = 0;         // n
  Index flag_horizon = 1;              // N
  double epsilon = 0.0;

  FlagState(Index block_count, Index horizon, double eps)
      : remaining_skips(block_count, 0),
        last_used(block_count == 0 ? 0 : block_count - 1),
        flag_horizon(horizon),
        epsilon(eps) {
    if (block_count == 0) throw InvalidControlError("FlagState: no blocks");
    if (horizon < 1) throw InvalidControlError("FlagState: flag horizon must be >= 1");
    if (!(eps >= 0.0)) throw InvalidControlError("FlagState: epsilon must be nonnegative");
  }

  bool available(Index block) const { return remaining_skips.at(block) == 0; }
};

/// Step 1: the next available block after the last used one. Flag counters
/// of the blocks passed over are consumed.
inline Index select_next_block(FlagState& state, const OuterSchedule& sched) {
  const Index s = sched.block_count();
  if (state.remaining_skips.size() != s) throw InvalidControlError("FlagState/schedule mismatch");
  Index pos = (state.last_used + 1) % s;
  // Every counter is at most N and drops by one per full pass.
  const Index limit = (state.flag_horizon + 1) * s + 1;
  for (Index scanned = 0; scanned < limit; ++scanned, pos = (pos + 1) % s) {
    if (state.remaining_skips[pos] == 0) return pos;
    --state.remaining_skips[pos];
  }
  throw std::logic_error("select_next_block: no available block (flag bookkeeping broken)");
}

struct LoppingDecision {
  bool compute;  // false: lopped, x^{k+1} = x^k
  bool stop;     // n == s: max_i p_i(x^k) <= epsilon on every block
};

/// Steps 2 and 3 for the block returned by `select_next_block`.
inline LoppingDecision record_visit(FlagState& state, const OuterSchedule& sched, Index block,
                                    double block_max_prox) {
  state.last_used = block;
  if (block_max_prox > state.epsilon) {
    state.consecutive_skips = 0;
    return {true, false};
  }
  ++state.consecutive_skips;
  state.remaining_skips.at(block) = state.flag_horizon;
  return {false, state.consecutive_skips >= sched.block_count()};
}

struct LoppingStep {
  Index block;
  LoppingDecision decision;
};

/// Steps 1-3 in one call. The proximity callback is evaluated on the chosen
/// block only.
template <class BlockMaxProx>
LoppingStep next_block_lopping(FlagState& state, const OuterSchedule& sched,
                               BlockMaxProx&& block_max_prox) {
  const Index blk = select_next_block(state, sched);
  const double p = block_max_prox(sched.block(blk));
  return {blk, record_visit(state, sched, blk, p)};
}

}  // namespace dlfp
