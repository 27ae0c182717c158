#pragma once

// Experiment harness: runs a matrix of strategies over a shared set of seeded
// problems, reduces the per-iteration metric
//
//   log10( max_i p_i(x^k) / max_i p_i(x^0) )
//
// to a median and nested percentile bands, and renders CSV / SVG.

#include "dlfp/problem.hpp"
#include "dlfp/solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dlfp {

/// Metric values are clamped at this floor (reached only when the max
/// proximity drops to exactly zero or below 1e-17 of its initial value).
inline constexpr double kMetricFloor = -17.0;

/// Bands of 10, 20, 30, 40 and 50 % concentration around the median.
inline constexpr std::array<double, 5> kBandLevels{10.0, 20.0, 30.0, 40.0, 50.0};

struct StrategySpec {
  std::string label;
  InnerStrategy inner = InnerStrategy::max_prox();
  Index block_size = 1;
  double alpha = 1.0;
  bool lopping = false;
  Index flag_horizon = 1;
};

inline StrategySpec make_strategy(std::string label, InnerStrategy inner, Index block_size, double alpha = 1.0) {
  StrategySpec s;
  s.label = std::move(label);
  s.inner = inner;
  s.block_size = block_size;
  s.alpha = alpha;
  return s;
}

struct ExperimentPlan {
  Index m = 100;
  Index n = 20;
  Index trials = 100;
  std::vector<StrategySpec> strategies;
  StoppingRule stopping{};
  std::uint64_t base_seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (trials < 1) throw InvalidParameterError("ExperimentPlan: trials must be >= 1");
    if (strategies.empty()) throw InvalidParameterError("ExperimentPlan: no strategies");
    if (m < 1 || n < 1) throw InvalidParameterError("ExperimentPlan: m and n must be >= 1");
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      const auto& s = strategies[i];
      for (std::size_t j = 0; j < i; ++j) {
        if (strategies[j].label == s.label) throw InvalidParameterError("ExperimentPlan: duplicate label '" + s.label + "'");
      }
      if (s.block_size < 1 || s.block_size > m) {
        throw InvalidParameterError("ExperimentPlan: block size of '" + s.label + "' outside [1, m]");
      }
      if (s.inner.kind == InnerStrategy::Kind::TopT && s.inner.top > s.block_size) {
        throw InvalidParameterError("ExperimentPlan: top-t larger than the block in '" + s.label + "'");
      }
    }
  }
};

struct StrategyAggregate {
  StrategySpec spec;
  std::vector<double> median;                     // per k
  std::array<std::vector<double>, 5> band_lower;  // per level, per k
  std::array<std::vector<double>, 5> band_upper;
  std::vector<std::uint64_t> terminal_iteration;  // per trial
  std::vector<double> terminal_metric;            // per trial
  std::vector<RunStatus> status;                  // per trial
  std::size_t failures = 0;
};

struct AggregateResult {
  std::vector<StrategyAggregate> strategies;
  std::size_t aligned_length = 0;  // number of k values, shared by all strategies

  const StrategyAggregate& at(const std::string& label) const {
    for (const auto& s : strategies) {
      if (s.spec.label == label) return s;
    }
    throw std::out_of_range("AggregateResult: no strategy '" + label + "'");
  }
};

/// Per-iteration metric of a trace; exactly 0 at k = 0.
inline std::vector<double> metric(const IterateTrace& trace) {
  if (trace.records.empty()) throw InvalidParameterError("metric: empty trace");
  const double p0 = trace.records.front().max_prox_all;
  if (!(p0 > 0.0)) throw InvalidProblemError("metric: x0 is feasible, the ratio is undefined");
  std::vector<double> out(trace.records.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double ratio = trace.records[k].max_prox_all / p0;
    out[k] = ratio > 0.0 ? std::max(std::log10(ratio), kMetricFloor) : kMetricFloor;
  }
  out[0] = 0.0;
  return out;
}

/// Percentile (0..100) with linear interpolation between order statistics
/// of an already sorted sample.
inline double percentile_sorted(std::span<const double> sorted, double pct) {
  if (sorted.empty()) throw InvalidParameterError("percentile: empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline OuterSchedule schedule_for(const StrategySpec& s, Index m) { return OuterSchedule::contiguous(m, s.block_size); }

inline SolverConfig config_for(const StrategySpec& s, const StoppingRule& stopping) {
  SolverConfig cfg;
  cfg.alpha = AlphaPolicy::constant(s.alpha);
  cfg.stopping = stopping;
  return cfg;
}

/// Runs one strategy on one linear-inequality problem.
inline IterateTrace run_strategy(const ProblemInstance& problem, const StrategySpec& s, const StoppingRule& stopping,
                                 bool record_iterates = false) {
  const auto sets = halfspaces(problem);
  const auto sched = schedule_for(s, problem.rows());
  SolverConfig cfg = config_for(s, stopping);
  cfg.record_iterates = record_iterates;
  const std::span<const HalfSpace> family(sets);
  if (s.lopping) return run_lopping(problem.x0, family, sched, s.inner, cfg, s.flag_horizon, problem.witness);
  return run(problem.x0, family, sched, s.inner, cfg, problem.witness);
}

namespace detail {

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  unsigned t = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  t = static_cast<unsigned>(std::min<std::size_t>(t, count));
  if (t <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Executes every strategy on trials j = 0..N-1, trial j using the problem
/// generated from seed base_seed + j. The reduction is independent of the
/// thread count and completion order.
inline AggregateResult run_plan(const ExperimentPlan& plan) {
  plan.validate();
  const std::size_t S = plan.strategies.size();
  const std::size_t N = plan.trials;
  // metrics[strategy][trial]
  std::vector<std::vector<std::vector<double>>> metrics(S, std::vector<std::vector<double>>(N));
  std::vector<std::vector<RunStatus>> statuses(S, std::vector<RunStatus>(N, RunStatus::MaxIters));

  detail::parallel_for(N, plan.threads, [&](std::size_t j) {
    const ProblemInstance problem = generate_problem(plan.m, plan.n, plan.base_seed + j);
    for (std::size_t s = 0; s < S; ++s) {
      const IterateTrace trace = run_strategy(problem, plan.strategies[s], plan.stopping);
      metrics[s][j] = metric(trace);
      statuses[s][j] = trace.status;
    }
  });

  AggregateResult out;
  for (const auto& per_strategy : metrics) {
    for (const auto& series : per_strategy) out.aligned_length = std::max(out.aligned_length, series.size());
  }
  std::vector<double> column(N);
  for (std::size_t s = 0; s < S; ++s) {
    StrategyAggregate agg;
    agg.spec = plan.strategies[s];
    agg.status = statuses[s];
    for (std::size_t j = 0; j < N; ++j) {
      agg.terminal_iteration.push_back(metrics[s][j].size() - 1);
      agg.terminal_metric.push_back(metrics[s][j].back());
      if (statuses[s][j] == RunStatus::NumericalFailure) ++agg.failures;
    }
    agg.median.resize(out.aligned_length);
    for (auto& v : agg.band_lower) v.resize(out.aligned_length);
    for (auto& v : agg.band_upper) v.resize(out.aligned_length);
    for (std::size_t k = 0; k < out.aligned_length; ++k) {
      for (std::size_t j = 0; j < N; ++j) {
        const auto& series = metrics[s][j];
        column[j] = k < series.size() ? series[k] : series.back();
      }
      std::sort(column.begin(), column.end());
      agg.median[k] = percentile_sorted(column, 50.0);
      for (std::size_t b = 0; b < kBandLevels.size(); ++b) {
        agg.band_lower[b][k] = percentile_sorted(column, 50.0 - kBandLevels[b] / 2.0);
        agg.band_upper[b][k] = percentile_sorted(column, 50.0 + kBandLevels[b] / 2.0);
      }
    }
    out.strategies.push_back(std::move(agg));
  }
  return out;
}

/// Median of a sample of terminal iterations.
inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return percentile_sorted(v, 50.0);
}

inline double median_terminal_iteration(const StrategyAggregate& agg) {
  std::vector<double> v(agg.terminal_iteration.begin(), agg.terminal_iteration.end());
  return median_of(std::move(v));
}

struct FigureSpec {
  std::string name;
  std::string title;
  std::vector<StrategySpec> strategies;
};

/// The four figure layouts of the benchmark study.
inline std::vector<FigureSpec> default_figures() {
  std::vector<FigureSpec> figs;
  {
    FigureSpec f{"fig1", "Maximum proximity over cyclic outer blocks of size b", {}};
    f.strategies.push_back(make_strategy("cyclic (b=1)", InnerStrategy::max_prox(), 1));
    for (Index b : {2, 3, 5, 10, 25}) {
      f.strategies.push_back(make_strategy("maxprox b=" + std::to_string(b), InnerStrategy::max_prox(), b));
    }
    figs.push_back(std::move(f));
  }
  {
    FigureSpec f{"fig2", "Top-t inner blocks, b=25", {}};
    f.strategies.push_back(make_strategy("simultaneous (t=25)", InnerStrategy::top_t(25), 25));
    for (Index t : {15, 10, 5}) {
      f.strategies.push_back(make_strategy("top t=" + std::to_string(t), InnerStrategy::top_t(t), 25));
    }
    f.strategies.push_back(make_strategy("maxprox (t=1)", InnerStrategy::top_t(1), 25));
    figs.push_back(std::move(f));
  }
  {
    FigureSpec f{"fig3", "Threshold inner blocks, b=25", {}};
    f.strategies.push_back(make_strategy("simultaneous (t=0)", InnerStrategy::threshold_t(0.0), 25));
    for (double t : {0.1, 0.25, 0.5, 0.75}) {
      f.strategies.push_back(make_strategy(fmt::format("threshold t={}", t), InnerStrategy::threshold_t(t), 25));
    }
    f.strategies.push_back(make_strategy("maxprox (t=1)", InnerStrategy::threshold_t(1.0), 25));
    figs.push_back(std::move(f));
  }
  {
    FigureSpec f{"fig4", "Inner/outer ratio t/b in {0.3, 0.5, 0.7}", {}};
    for (double ratio : {0.3, 0.5, 0.7}) {
      for (Index b : {10, 20, 50}) {
        const auto t = static_cast<Index>(std::lround(ratio * static_cast<double>(b)));
        f.strategies.push_back(
            make_strategy(fmt::format("t/b={} (t={},b={})", ratio, t, b), InnerStrategy::top_t(t), b));
      }
    }
    figs.push_back(std::move(f));
  }
  return figs;
}

/// One row per (strategy, k): median and band edges.
inline std::string render_csv(const AggregateResult& result) {
  std::string out = "strategy,k,median";
  for (double lvl : kBandLevels) out += fmt::format(",lo{0:g},hi{0:g}", lvl);
  out += '\n';
  for (const auto& s : result.strategies) {
    for (std::size_t k = 0; k < result.aligned_length; ++k) {
      out += fmt::format("\"{}\",{},{:.17g}", s.spec.label, k, s.median[k]);
      for (std::size_t b = 0; b < kBandLevels.size(); ++b) {
        out += fmt::format(",{:.17g},{:.17g}", s.band_lower[b][k], s.band_upper[b][k]);
      }
      out += '\n';
    }
  }
  return out;
}

namespace detail {

inline std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Static ribbon plot: shaded nested bands and one bold median path per strategy.
inline std::string render_svg(const AggregateResult& result, const std::string& title) {
  if (result.strategies.empty() || result.aligned_length == 0) {
    throw InvalidParameterError("render_svg: empty result");
  }
  static constexpr std::array<const char*, 9> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                      "#8c564b", "#e377c2", "#17becf", "#7f7f7f"};
  constexpr double W = 800, H = 520, left = 70, right = 220, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  const std::size_t L = result.aligned_length;
  double ymin = 0.0;
  for (const auto& s : result.strategies) {
    for (double v : s.band_lower.back()) ymin = std::min(ymin, v);
  }
  ymin = std::floor(ymin) - 0.5;
  const double ymax = 0.5;
  const double xmax = static_cast<double>(std::max<std::size_t>(L - 1, 1));
  auto X = [&](double k) { return left + pw * k / xmax; };
  auto Y = [&](double v) { return top + ph * (ymax - v) / (ymax - ymin); };
  const std::size_t stride = std::max<std::size_t>(1, (L + 799) / 800);
  std::vector<std::size_t> ks;
  for (std::size_t k = 0; k < L; k += stride) ks.push_back(k);
  if (ks.back() != L - 1) ks.push_back(L - 1);

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
      W, H, W, H, left, detail::xml_escape(title));
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left, top,
                     pw, ph);
  for (double v = std::ceil(ymin); v <= 0.0; v += 1.0) {
    svg += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#dddddd\"/>"
        "<text x=\"{3:.2f}\" y=\"{4:.2f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{5}</text>\n",
        left, Y(v), left + pw, left - 6, Y(v) + 4, v);
  }
  for (int i = 0; i <= 5; ++i) {
    const double k = xmax * i / 5.0;
    svg += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
        X(k), top + ph + 18, static_cast<long>(std::lround(k)));
  }
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\" "
                     "text-anchor=\"middle\">iteration k</text>\n",
                     left + pw / 2, H - 10);
  svg += fmt::format("<text x=\"16\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"12\" "
                     "transform=\"rotate(-90 16 {:.2f})\" text-anchor=\"middle\">log10 max prox ratio</text>\n",
                     top + ph / 2, top + ph / 2);

  for (std::size_t si = 0; si < result.strategies.size(); ++si) {
    const auto& s = result.strategies[si];
    const char* color = palette[si % palette.size()];
    for (std::size_t b = kBandLevels.size(); b-- > 0;) {
      std::string d;
      for (std::size_t k : ks) d += fmt::format("{}{:.2f},{:.2f}", d.empty() ? "M" : " L", X(static_cast<double>(k)), Y(s.band_upper[b][k]));
      for (auto it = ks.rbegin(); it != ks.rend(); ++it) {
        d += fmt::format(" L{:.2f},{:.2f}", X(static_cast<double>(*it)), Y(s.band_lower[b][*it]));
      }
      svg += fmt::format("<path class=\"band\" d=\"{} Z\" fill=\"{}\" fill-opacity=\"0.08\" stroke=\"none\"/>\n", d,
                         color);
    }
    std::string d;
    for (std::size_t k : ks) d += fmt::format("{}{:.2f},{:.2f}", d.empty() ? "M" : " L", X(static_cast<double>(k)), Y(s.median[k]));
    svg += fmt::format("<path class=\"median\" d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2.5\"/>\n", d, color);
    const double ly = top + 14 + 18.0 * static_cast<double>(si);
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"2.5\"/>"
                       "<text x=\"{4:.2f}\" y=\"{5:.2f}\" font-family=\"sans-serif\" font-size=\"11\">{6}</text>\n",
                       left + pw + 12, ly, left + pw + 36, color, left + pw + 42, ly + 4,
                       detail::xml_escape(s.spec.label));
  }
  svg += "</svg>\n";
  return svg;
}

enum class EmitFormat { Csv, Svg, Both };

/// Writes `<dir>/<stem>.csv` and/or `<dir>/<stem>.svg`; returns the paths written.
inline std::vector<std::filesystem::path> emit(const AggregateResult& result, const std::filesystem::path& dir,
                                               const std::string& stem, EmitFormat format,
                                               const std::string& title = "") {
  if (result.strategies.empty()) throw InvalidParameterError("emit: empty result");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::filesystem::path& p, const std::string& body) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("emit: cannot write " + p.string());
    os << body;
    if (!os) throw std::runtime_error("emit: write failed for " + p.string());
    written.push_back(p);
  };
  if (format != EmitFormat::Svg) write(dir / (stem + ".csv"), render_csv(result));
  if (format != EmitFormat::Csv) write(dir / (stem + ".svg"), render_svg(result, title.empty() ? stem : title));
  return written;
}

}  // namespace dlfp
