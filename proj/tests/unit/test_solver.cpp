#include "dlfp/problem.hpp"
#include "dlfp/solver.hpp"

#include <gtest/gtest.h>

using namespace dlfp;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

std::vector<HalfSpace> quadrant() { return {HalfSpace(v2(1, 0), 0.0), HalfSpace(v2(0, 1), 0.0)}; }

template <class U>
std::span<const U> span_of(const std::vector<U>& v) {
  return std::span<const U>(v);
}

SolverConfig config(double alpha = 1.0, bool iterates = false) {
  SolverConfig c;
  c.alpha = AlphaPolicy::constant(alpha);
  c.record_iterates = iterates;
  return c;
}

}  // namespace

TEST(Step, SingleProjection) {
  const std::vector<HalfSpace> h{HalfSpace(v2(1, 0), 0.0)};
  const auto r = step(v2(2, 3), span_of(h), IndexSet{0}, InnerStrategy::all(), 1.0);
  EXPECT_EQ(r.x, v2(0, 3));
}

TEST(Step, SimultaneousMidpoint) {
  const auto h = quadrant();
  const auto r = step(v2(2, 2), span_of(h), IndexSet{0, 1}, InnerStrategy::all(), 1.0);
  EXPECT_EQ(r.x, v2(1, 1));
  EXPECT_EQ(r.selected, (IndexSet{0, 1}));
}

TEST(Step, MaxProxTieGoesToLowestIndex) {
  const auto h = quadrant();
  const auto r = step(v2(2, 2), span_of(h), IndexSet{0, 1}, InnerStrategy::max_prox(), 1.0);
  EXPECT_EQ(r.x, v2(0, 2));
  EXPECT_EQ(r.selected, (IndexSet{0}));
}

TEST(Step, RelaxedStep) {
  const std::vector<HalfSpace> h{HalfSpace(v2(1, 0), 0.0)};
  const auto r = step(v2(2, 0), span_of(h), IndexSet{0}, InnerStrategy::all(), 1.5);
  EXPECT_NEAR(r.x(0), -1.0, 1e-15);
}

TEST(Step, ActiveWithEverythingSatisfiedIsIdentity) {
  const auto h = quadrant();
  const Vector x = v2(-1, -2);
  const auto r = step(x, span_of(h), IndexSet{0, 1}, InnerStrategy::active(), 1.0);
  EXPECT_EQ(r.x, x);
  EXPECT_TRUE(r.selected.empty());
}

TEST(Step, ErrorPaths) {
  const auto h = quadrant();
  EXPECT_THROW(step(v2(1, 1), span_of(h), IndexSet{}, InnerStrategy::all(), 1.0), InvalidControlError);
  EXPECT_THROW(step(v2(1, 1), span_of(h), IndexSet{0, 5}, InnerStrategy::all(), 1.0), InvalidControlError);
  EXPECT_THROW(step(v2(1, 1), span_of(h), IndexSet{0}, InnerStrategy::all(), 2.0), InvalidParameterError);
  EXPECT_THROW(step(v2(1, 1), span_of(h), IndexSet{0}, InnerStrategy::all(), 0.0), InvalidParameterError);
  EXPECT_THROW(step(Vector::Ones(3), span_of(h), IndexSet{0}, InnerStrategy::all(), 1.0), DimensionMismatchError);
}

TEST(Policies, Validation) {
  EXPECT_THROW(AlphaPolicy::constant(2.0), InvalidParameterError);
  EXPECT_THROW(AlphaPolicy::constant(0.0), InvalidParameterError);
  const auto sched = AlphaPolicy::schedule(0.5, 1.5, [](std::uint64_t k) { return k == 3 ? 1.7 : 1.0; });
  EXPECT_DOUBLE_EQ(sched.at(0), 1.0);
  EXPECT_THROW(sched.at(3), InvalidParameterError);

  const auto bad_sum = WeightPolicy::custom([](std::uint64_t, const IndexSet& s) {
    return std::vector<double>(s.size(), 0.6);
  }, 0.1);
  EXPECT_THROW(bad_sum.weights(0, IndexSet{0, 1}), InvalidParameterError);
  const auto below = WeightPolicy::custom([](std::uint64_t, const IndexSet&) {
    return std::vector<double>{0.95, 0.05};
  }, 0.1);
  EXPECT_THROW(below.weights(0, IndexSet{0, 1}), InvalidParameterError);
  EXPECT_THROW(WeightPolicy::custom(nullptr, 0.5), InvalidParameterError);
}

TEST(Run, FeasibleStartStopsImmediately) {
  const auto h = quadrant();
  const auto tr = run(v2(-1, -1), span_of(h), OuterSchedule::contiguous(2, 1), InnerStrategy::all(), config());
  EXPECT_EQ(tr.status, RunStatus::Converged);
  EXPECT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr.final_point, v2(-1, -1));
}

TEST(Run, OneDimensionalRespectsCheckCadence) {
  const std::vector<HalfSpace> h{HalfSpace(Vector::Ones(1), 0.0)};
  const auto tr = run(Vector::Constant(1, 5.0), span_of(h), OuterSchedule::contiguous(1, 1), InnerStrategy::all(),
                      config());
  // Feasible after one step, but the test only runs at k = 0, 100, ...
  EXPECT_EQ(tr.status, RunStatus::Converged);
  EXPECT_EQ(tr.final_iteration(), 100u);
  EXPECT_DOUBLE_EQ(tr.records[1].max_prox_all, 0.0);
  EXPECT_DOUBLE_EQ(tr.final_point(0), 0.0);
}

TEST(Run, MaxItersCap) {
  const auto p = generate_problem(100, 20, 3);
  const auto h = halfspaces(p);
  auto cfg = config();
  cfg.stopping.max_iters = 7;
  cfg.record_selection = true;
  const auto tr = run(p.x0, span_of(h), OuterSchedule::contiguous(100, 1), InnerStrategy::all(), cfg);
  EXPECT_EQ(tr.status, RunStatus::MaxIters);
  EXPECT_EQ(tr.size(), 8u);
  EXPECT_EQ(tr.selected.size(), 8u);
  EXPECT_FALSE(tr.records.back().computed);
}

TEST(Run, ScheduleMismatchRejected) {
  const auto h = quadrant();
  EXPECT_THROW(run(v2(1, 1), span_of(h), OuterSchedule::contiguous(3, 1), InnerStrategy::all(), config()),
               InvalidControlError);
  EXPECT_THROW(run(v2(1, 1), span_of(h), OuterSchedule({{0}}, 2), InnerStrategy::all(), config()),
               InvalidControlError);
}

TEST(Run, DivergenceReported) {
  // A non-cutter that doubles x: the guard must report a numerical failure.
  const std::vector<Cutter> bad{Cutter::from_operator([](const Vector& x) { return Vector(2.0 * x + Vector::Ones(x.size())); })};
  const auto tr = run(v2(1, 1), span_of(bad), OuterSchedule::contiguous(1, 1), InnerStrategy::all(), config());
  EXPECT_EQ(tr.status, RunStatus::NumericalFailure);
}

TEST(Run, MaxProxFullBlockConverges) {
  const auto p = generate_problem(100, 20, 1);
  const auto h = halfspaces(p);
  const auto tr = run(p.x0, span_of(h), OuterSchedule::contiguous(100, 100), InnerStrategy::max_prox(), config(),
                      p.witness);
  EXPECT_EQ(tr.status, RunStatus::Converged);
  EXPECT_LE(tr.final_iteration(), 5000u);
  EXPECT_LE(p.max_violation(tr.final_point), 1e-6);
}

TEST(Fejer, WitnessDistanceNeverIncreases) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto p = generate_problem(100, 20, seed);
    const auto h = halfspaces(p);
    for (double alpha : {0.5, 1.0, 1.5}) {
      for (const auto& strat : {InnerStrategy::all(), InnerStrategy::max_prox(), InnerStrategy::top_t(5),
                                InnerStrategy::threshold_t(0.5), InnerStrategy::active()}) {
        auto cfg = config(alpha, true);
        cfg.stopping.max_iters = 300;
        const auto tr = run(p.x0, span_of(h), OuterSchedule::contiguous(100, 25), strat, cfg, p.witness);
        EXPECT_LE(fejer_check_witness(tr), 1e-10);
        EXPECT_LE(fejer_check(tr, p.witness, span_of(h)), 1e-10);
        const double rho = (2.0 - alpha) / alpha;
        EXPECT_LE(sqne_violation(tr, p.witness, rho), 1e-9 * (p.x0 - p.witness).squaredNorm());
      }
    }
  }
}

TEST(Fejer, DetectsCorruptedTrace) {
  IterateTrace tr;
  tr.records.resize(3);
  tr.iterates = {v2(2, 0), v2(1, 0), v2(3, 0)};
  for (std::size_t k = 0; k < 3; ++k) tr.records[k].dist_witness = tr.iterates[k].norm();
  const auto h = quadrant();
  EXPECT_NEAR(fejer_check(tr, v2(0, 0), span_of(h)), 2.0, 1e-15);
  EXPECT_NEAR(fejer_check_witness(tr), 2.0, 1e-15);
  EXPECT_THROW(fejer_check(tr, v2(1, 1), span_of(h)), InvalidProblemError);
}

TEST(Fejer, ConstantTraceHasNoViolation) {
  IterateTrace tr;
  tr.records.resize(4);
  tr.iterates.assign(4, v2(1, 1));
  const auto h = quadrant();
  EXPECT_EQ(fejer_check(tr, v2(-1, 0), span_of(h)), 0.0);
}

TEST(AggregateDisplacement, LowerBoundOnCombinedStep) {
  // (1/2R) sum w_i ||U_i x - x||^2 <= ||T x - x|| for T = sum w_i U_i, R >= ||x - z||.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = generate_problem(30, 5, seed);
    const auto h = halfspaces(p);
    Rng rng(seed + 1000);
    for (int j = 0; j < 20; ++j) {
      const Vector x = p.witness + 8.0 * rng.normal_vector(5);
      const double R = (x - p.witness).norm();
      Vector Tx = Vector::Zero(5);
      double lhs = 0.0;
      for (const auto& c : h) {
        const Vector u = c.apply(x);
        Tx += u / 30.0;
        lhs += (u - x).squaredNorm() / 30.0;
      }
      EXPECT_LE(lhs / (2.0 * R), (Tx - x).norm() + 1e-12);
    }
  }
}

TEST(SpecialCases, CyclicAndSimultaneousMatchDirectCoding) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto p = generate_problem(40, 10, seed);
    const auto h = halfspaces(p);
    auto cfg = config(1.0, true);
    cfg.stopping.max_iters = 400;
    const auto cyc = run(p.x0, span_of(h), OuterSchedule::contiguous(40, 1), InnerStrategy::all(), cfg);
    Vector x = p.x0;
    for (std::size_t k = 0; k < cyc.iterates.size(); ++k) {
      ASSERT_TRUE((cyc.iterates[k].array() == x.array()).all()) << "cyclic k=" << k;
      x = h[k % h.size()].apply(x);
    }
    const auto sim = run(p.x0, span_of(h), OuterSchedule::contiguous(40, 40), InnerStrategy::all(), cfg);
    x = p.x0;
    const double w = 1.0 / 40.0;
    for (std::size_t k = 0; k < sim.iterates.size(); ++k) {
      ASSERT_TRUE((sim.iterates[k].array() == x.array()).all()) << "simultaneous k=" << k;
      Vector next = Vector::Zero(x.size());
      for (const auto& c : h) next += w * c.apply(x);
      x = next;
    }
  }
}

TEST(SpecialCases, AffineLimitIsLeastSquaresProjection) {
  const auto p = generate_equality_problem(10, 20, 4);
  const auto hp = hyperplanes(p);
  auto cfg = config();
  cfg.stopping.epsilon = 1e-12;
  cfg.stopping.max_iters = 200000;
  const auto tr = run(p.x0, span_of(hp), OuterSchedule::contiguous(10, 10), InnerStrategy::all(), cfg);
  ASSERT_EQ(tr.status, RunStatus::Converged);
  const Vector target = p.x0 - p.A.completeOrthogonalDecomposition().solve(p.A * p.x0 - p.b);
  EXPECT_LE((tr.final_point - target).norm(), 1e-8);
}

TEST(Lopping, LargeEpsilonCertifiesWithoutMoving) {
  const auto p = generate_problem(20, 5, 2);
  const auto h = halfspaces(p);
  auto cfg = config();
  cfg.stopping.epsilon = 1e9;
  const auto tr = run_lopping(p.x0, span_of(h), OuterSchedule::contiguous(20, 5), InnerStrategy::all(), cfg, 1);
  EXPECT_EQ(tr.status, RunStatus::LoppingCertified);
  EXPECT_EQ(tr.size(), 4u);
  EXPECT_EQ(tr.final_point, p.x0);
}

TEST(Lopping, ZeroEpsilonMatchesCyclicOnGenericData) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto p = generate_equality_problem(30, 10, seed);
    const auto hp = hyperplanes(p);
    auto cfg = config(1.0, true);
    cfg.stopping.epsilon = 0.0;
    cfg.stopping.max_iters = 300;
    const auto sched = OuterSchedule::contiguous(30, 5);
    const auto plain = run(p.x0, span_of(hp), sched, InnerStrategy::max_prox(), cfg);
    const auto lop = run_lopping(p.x0, span_of(hp), sched, InnerStrategy::max_prox(), cfg, 2);
    ASSERT_EQ(plain.size(), lop.size());
    for (std::size_t k = 0; k < plain.size(); ++k) {
      ASSERT_EQ(plain.records[k].block_id, lop.records[k].block_id);
      ASSERT_TRUE((plain.iterates[k].array() == lop.iterates[k].array()).all());
    }
  }
}

TEST(Lopping, SmallEpsilonTerminatesWithCertificate) {
  const auto p = generate_problem(100, 20, 9);
  const auto h = halfspaces(p);
  auto cfg = config();
  cfg.stopping.epsilon = 1e-6;
  cfg.stopping.max_iters = 200000;
  const auto tr = run_lopping(p.x0, span_of(h), OuterSchedule::contiguous(100, 10), InnerStrategy::max_prox(), cfg, 2);
  ASSERT_EQ(tr.status, RunStatus::LoppingCertified);
  EXPECT_LE(p.max_violation(tr.final_point), 1e-6);
}
