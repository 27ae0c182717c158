// dlfp: command line front end.
//
//   dlfp gen    --m 100 --n 20 --seed 1 --out data
//   dlfp solve  --strategy maxprox --block-size 25 --out runs
//   dlfp bench  --trials 100 --figures fig1,fig2 --format both --out figures
//   dlfp rates  --block-size 25 --top 5 --out rates
//
// Every flag can also come from a TOML/INI file given with --config; flags on
// the command line win over the file.

#include "dlfp/dlfp.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ranges.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace dlfp;

namespace {

struct Options {
  Index m = 100;
  Index n = 20;
  Index trials = 100;
  std::uint64_t seed = 1;
  std::string strategy = "maxprox";
  Index block_size = 0;  // 0: all constraints in one block
  double alpha = 1.0;
  double eps = 1e-6;
  std::uint64_t check_every = 100;
  std::uint64_t max_iters = 5000;
  bool lopping = false;
  Index flag_horizon = 1;
  std::string out = ".";
  std::string format = "both";
  std::string problem_file;
  std::vector<std::string> figures{"fig1", "fig2", "fig3", "fig4"};
  unsigned threads = 0;
  Index top = 1;
  double threshold = 0.5;
  std::size_t kappa_samples = 200;
  double kappa_factor = 2.0;
};

StoppingRule stopping(const Options& o) {
  StoppingRule s;
  s.epsilon = o.eps;
  s.check_every = o.check_every;
  s.max_iters = o.max_iters;
  return s;
}

// `cyclic` is All over blocks of one constraint; everything else goes to the parser.
StrategySpec strategy_spec(const Options& o, Index m) {
  StrategySpec s;
  s.label = o.strategy;
  if (o.strategy == "cyclic") {
    s.inner = InnerStrategy::all();
    s.block_size = 1;
  } else {
    s.inner = InnerStrategy::parse(o.strategy);
    s.block_size = o.block_size == 0 ? m : o.block_size;
  }
  if (s.block_size > m) throw InvalidParameterError("--block-size larger than the number of constraints");
  s.alpha = o.alpha;
  s.lopping = o.lopping;
  s.flag_horizon = o.flag_horizon;
  return s;
}

ProblemInstance load_or_generate(const Options& o) {
  if (!o.problem_file.empty()) {
    std::ifstream is(o.problem_file);
    if (!is) throw std::runtime_error("cannot open " + o.problem_file);
    return read_problem(is);
  }
  return generate_problem(o.m, o.n, o.seed);
}

fs::path prepare_out(const Options& o) {
  const fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

int cmd_gen(const Options& o) {
  const auto p = generate_problem(o.m, o.n, o.seed);
  const fs::path file = prepare_out(o) / fmt::format("problem_m{}_n{}_seed{}.txt", o.m, o.n, o.seed);
  auto os = open_out(file);
  write_problem(os, p);
  fmt::print("wrote {}\n", file.string());
  return 0;
}

int cmd_solve(const Options& o) {
  const auto p = load_or_generate(o);
  const auto spec = strategy_spec(o, p.rows());
  const auto tr = run_strategy(p, spec, stopping(o));
  const fs::path file = prepare_out(o) / "trace.csv";
  auto os = open_out(file);
  write_trace(os, tr);
  fmt::print("status {} after {} iterations, max proximity {:.3e}\n", to_string(tr.status), tr.final_iteration(),
             tr.records.back().max_prox_all);
  fmt::print("wrote {}\n", file.string());
  return tr.status == RunStatus::NumericalFailure ? 2 : 0;
}

EmitFormat parse_format(const std::string& f) {
  if (f == "csv") return EmitFormat::Csv;
  if (f == "svg") return EmitFormat::Svg;
  return EmitFormat::Both;
}

int cmd_bench(const Options& o) {
  const fs::path dir = prepare_out(o);
  const auto all = default_figures();
  for (const auto& name : o.figures) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const FigureSpec& f) { return f.name == name; });
    if (it == all.end()) throw InvalidParameterError("unknown figure '" + name + "'");
    ExperimentPlan plan;
    plan.m = o.m;
    plan.n = o.n;
    plan.trials = o.trials;
    plan.base_seed = o.seed;
    plan.threads = o.threads;
    plan.stopping = stopping(o);
    plan.strategies = it->strategies;
    const auto res = run_plan(plan);
    for (const auto& path : emit(res, dir, it->name, parse_format(o.format), it->title)) {
      fmt::print("wrote {}\n", path.string());
    }
    for (const auto& s : res.strategies) {
      fmt::print("  {:<28} median iterations {:>7}  median terminal metric {:8.3f}  failures {}\n", s.spec.label,
                 median_terminal_iteration(s), s.median.back(), s.failures);
    }
  }
  return 0;
}

int cmd_rates(const Options& o) {
  const auto p = load_or_generate(o);
  const auto h = halfspaces(p);
  const auto sets = as_simple_sets(h);
  const auto proj = nearest_point(sets, p.x0);
  const auto [delta, Delta] = linear_system_constants(p.A);
  const double kappa_hat = estimate_kappa(sets, proj.point, std::max(proj.distance, 1e-12), o.kappa_samples, o.seed);
  const RegularityConstants c{delta, Delta, o.kappa_factor * kappa_hat, Provenance::Heuristic};
  const Index m = p.rows();
  const Index b = o.block_size == 0 ? m : o.block_size;
  const Index t = std::min(o.top, b);

  struct Row {
    Method method;
    StrategySpec spec;
  };
  const std::vector<Row> rows{
      {Method::Cyclic, make_strategy("cyclic", InnerStrategy::all(), 1)},
      {Method::Simultaneous, make_strategy("simultaneous", InnerStrategy::all(), b)},
      {Method::Active, make_strategy("active", InnerStrategy::active(), b)},
      {Method::MaxProx, make_strategy("maxprox", InnerStrategy::max_prox(), b)},
      {Method::TopT, make_strategy("top_t", InnerStrategy::top_t(t), b)},
      {Method::Threshold, make_strategy("threshold", InnerStrategy::threshold_t(o.threshold), b)},
  };
  std::vector<RateRecord> out;
  for (const auto& r : rows) {
    const auto rep = make_rate_report(r.method, m, r.spec.block_size, t, c, proj.distance);
    const auto tr = run_strategy(p, r.spec, stopping(o));
    RateRecord rec;
    rec.method = to_string(r.method);
    rec.m = m;
    rec.b = rep.b;
    rec.t = r.method == Method::TopT ? t : 0;
    rec.s = rep.s;
    rec.delta_r = delta;
    rec.Delta_r = Delta;
    rec.kappa = c.kappa_r;
    rec.kappa_provenance = c.provenance;
    rec.q_r = rep.q_r;
    rec.c_r = rep.c_r;
    try {
      rec.q_hat_empirical = fit_empirical_rate(tr);
    } catch (const InvalidParameterError&) {
      rec.q_hat_empirical = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(rec);
  }
  const fs::path file = prepare_out(o) / "rates.csv";
  auto os = open_out(file);
  write_rate_records(os, out);
  fmt::print("d(x0, C) = {:.6g}, delta = {:.6g}, Delta = {:.6g}, kappa estimate = {:.6g} (using {} x)\n", proj.distance,
             delta, Delta, kappa_hat, o.kappa_factor);
  for (const auto& r : out) fmt::print("  {:<13} q_r = {:.10f}  empirical = {:.6f}\n", r.method, r.q_r, r.q_hat_empirical);
  fmt::print("wrote {}\n", file.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double-layer fixed point solver for convex feasibility problems"};
  app.set_config("--config", "", "TOML/INI file with default values for any flag");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--m", o.m, "Number of constraints")->check(CLI::PositiveNumber);
  app.add_option("--n", o.n, "Dimension")->check(CLI::PositiveNumber);
  app.add_option("--trials", o.trials, "Benchmark trials")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Problem seed (benchmark: base seed)");
  app.add_option("--strategy,--inner", o.strategy, "cyclic|all|active|maxprox|top:<t>|threshold:<t>");
  app.add_option("--block-size,--outer_block_size", o.block_size, "Outer block size b (0: one block)");
  app.add_option("--alpha", o.alpha, "Relaxation parameter in (0, 2)")->check(CLI::Range(0.0, 2.0));
  app.add_option("--eps,--epsilon", o.eps, "Stopping and lopping threshold")->check(CLI::NonNegativeNumber);
  app.add_option("--check-every", o.check_every, "Stopping test cadence")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", o.max_iters, "Iteration cap");
  app.add_flag("--lopping", o.lopping, "Skip and flag satisfied blocks");
  app.add_option("--flag-horizon,--flag_horizon", o.flag_horizon, "Turns a skipped block stays flagged")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--format", o.format, "Figure format")->check(CLI::IsMember({"csv", "svg", "both"}));
  app.add_option("--problem", o.problem_file, "Problem file (solve, rates); generated from --m/--n/--seed if absent");
  app.add_option("--figures", o.figures, "Figures to run (bench)")->delimiter(',');
  app.add_option("--threads", o.threads, "Worker threads for bench (0: all cores)");
  app.add_option("--top", o.top, "t for the top-t row (rates)")->check(CLI::PositiveNumber);
  app.add_option("--threshold", o.threshold, "t for the threshold row (rates)")->check(CLI::Range(0.0, 1.0));
  app.add_option("--kappa-samples", o.kappa_samples, "Samples for the regularity estimate (rates)");
  app.add_option("--kappa-factor", o.kappa_factor, "Multiplier applied to the regularity estimate (rates)")
      ->check(CLI::Range(1.0, 1e6));

  auto* gen = app.add_subcommand("gen", "Write a random problem file");
  auto* solve = app.add_subcommand("solve", "Run one strategy and write its trace");
  auto* bench = app.add_subcommand("bench", "Run the benchmark figures");
  auto* rates = app.add_subcommand("rates", "Write the rate report");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen(o);
    if (*solve) return cmd_solve(o);
    if (*bench) return cmd_bench(o);
    if (*rates) return cmd_rates(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
