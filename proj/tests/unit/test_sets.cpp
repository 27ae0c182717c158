#include "dlfp/sets.hpp"
#include "support/brute_force.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dlfp;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }
Vector v1(double a) { return Vector::Constant(1, a); }

void expect_vec_near(const Vector& got, const Vector& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (Eigen::Index i = 0; i < got.size(); ++i) EXPECT_NEAR(got(i), want(i), tol) << "component " << i;
}

}  // namespace

TEST(HalfSpace, ProjectsViolatingPoint) {
  HalfSpace h(v2(1, 0), 1.0);
  expect_vec_near(project_halfspace(h, v2(2, 0)), v2(1, 0), 0.0);
}

TEST(HalfSpace, FeasiblePointIsFixed) {
  HalfSpace h(v2(1, 0), 1.0);
  const Vector x = v2(0, 0);
  EXPECT_EQ(project_halfspace(h, x), x);
}

TEST(HalfSpace, ObliqueNormalMatchesBruteForce) {
  HalfSpace h(v2(3, 4), 0.0);
  const Vector p = project_halfspace(h, v2(3, 4));
  expect_vec_near(p, v2(0, 0), 1e-15);
  Rng rng(7);
  const auto bf = oracle::brute_halfspace(v2(3, 4), 0.0, v2(3, 4), rng);
  expect_vec_near(bf.point, v2(0, 0), 1e-6);
  EXPECT_NEAR(bf.distance, 5.0, 1e-8);
}

TEST(HalfSpace, ZeroNormalRejected) {
  EXPECT_THROW(HalfSpace(v2(0, 0), 1.0), InvalidSetError);
  EXPECT_THROW(Hyperplane(v2(0, 0), 1.0), InvalidSetError);
}

TEST(HalfSpace, DimensionMismatchRejected) {
  HalfSpace h(v2(1, 0), 1.0);
  EXPECT_THROW(project_halfspace(h, v1(1.0)), DimensionMismatchError);
}

TEST(Hyperplane, ProjectsFromEitherSide) {
  Hyperplane h(v2(1, 0), 1.0);
  expect_vec_near(project_hyperplane(h, v2(0, 5)), v2(1, 5), 0.0);
  expect_vec_near(project_hyperplane(h, v2(3, 5)), v2(1, 5), 0.0);
  EXPECT_DOUBLE_EQ(h.proximity(v2(0, 0)), 1.0);
}

TEST(Ball, RadialShrink) {
  Ball b(v2(0, 0), 1.0);
  expect_vec_near(project_ball(b, v2(2, 0)), v2(1, 0), 0.0);
  const Vector inside = v2(0.5, 0);
  EXPECT_EQ(project_ball(b, inside), inside);
}

TEST(Ball, OffsetCenterMatchesDenseBoundarySampling) {
  Ball b(v2(1, 1), 2.0);
  const Vector x = v2(4, 5);
  const Vector p = project_ball(b, x);
  expect_vec_near(p, v2(2.2, 2.6), 1e-15);
  EXPECT_NEAR((p - b.center()).norm(), 2.0, 1e-15);
  // Dense sampling of the circle: no boundary point is closer than p.
  double best = std::numeric_limits<double>::infinity();
  const int samples = 200000;
  for (int j = 0; j < samples; ++j) {
    const double th = 2.0 * M_PI * j / samples;
    const Vector y = b.center() + 2.0 * v2(std::cos(th), std::sin(th));
    best = std::min(best, (y - x).norm());
  }
  EXPECT_LE((p - x).norm(), best + 1e-12);
  EXPECT_NEAR((p - x).norm(), best, 1e-8);
}

TEST(Ball, InvalidRadiusRejected) {
  EXPECT_THROW(Ball(v2(0, 0), 0.0), InvalidSetError);
  EXPECT_THROW(Ball(v2(0, 0), -1.0), InvalidSetError);
  EXPECT_THROW(Ball(v2(0, 0), std::nan("")), InvalidSetError);
}

TEST(SubgradientProjection, AffineEqualsHalfSpaceProjection) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const Vector a = rng.normal_vector(4);
    const double b = rng.normal();
    const Vector x = 3.0 * rng.normal_vector(4);
    const Vector ps = subgradient_project(SublevelSet::affine(a, b), x);
    const Vector ph = project_halfspace(HalfSpace(a, b), x);
    expect_vec_near(ps, ph, 1e-12);
  }
}

TEST(SubgradientProjection, NormBallEqualsMetricProjection) {
  const auto f = SublevelSet::norm_ball(v2(0, 0), 1.0);
  expect_vec_near(subgradient_project(f, v2(2, 0)), v2(1, 0), 1e-15);
  expect_vec_near(subgradient_project(f, v2(2, 0)), project_ball(Ball(v2(0, 0), 1.0), v2(2, 0)), 1e-15);
}

TEST(SubgradientProjection, QuadraticDiffersFromMetricProjection) {
  const auto f = SublevelSet::quadratic_ball(v2(0, 0), 1.0);
  const auto s = f.evaluate(v2(2, 0));
  EXPECT_DOUBLE_EQ(s.value, 3.0);
  expect_vec_near(s.subgradient, v2(4, 0), 0.0);
  const Vector p = subgradient_project(f, v2(2, 0));
  expect_vec_near(p, v2(1.25, 0), 1e-15);
  EXPECT_GT((p - v2(1, 0)).norm(), 0.2);
}

TEST(SubgradientProjection, FeasiblePointIsFixed) {
  const auto f = SublevelSet::quadratic_ball(v2(0, 0), 1.0);
  const Vector x = v2(0.1, 0.2);
  EXPECT_EQ(subgradient_project(f, x), x);
}

TEST(SubgradientProjection, ZeroSubgradientAtInfeasiblePointIsContractError) {
  SublevelSet bad([](const Vector& x) { return SubgradientSample{1.0, Vector::Zero(x.size())}; });
  EXPECT_THROW(subgradient_project(bad, v2(0, 0)), OracleContractError);
}

TEST(SubgradientProjection, MaxAffineBreaksTiesByLowestRow) {
  Matrix A(2, 2);
  A << 1, 0, 0, 1;
  const auto f = SublevelSet::max_affine(A, v2(0, 0));
  const auto s = f.evaluate(v2(1, 1));
  expect_vec_near(s.subgradient, v2(1, 0), 0.0);
}

TEST(Proximity, Examples) {
  EXPECT_DOUBLE_EQ(HalfSpace(v2(1, 0), 1.0).proximity(v2(3, 0)), 2.0);
  EXPECT_DOUBLE_EQ(Hyperplane(v2(1, 0), 1.0).proximity(v2(0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(SublevelSet::quadratic_ball(v2(0, 0), 1.0).proximity(v2(2, 0)), 3.0);
  EXPECT_DOUBLE_EQ(HalfSpace(v2(1, 0), 1.0).proximity(v2(0, 0)), 0.0);
}

TEST(Relax, AlphaOneLeavesOperatorUnchanged) {
  const HalfSpace h(v2(1, 1), 0.5);
  const Cutter r = relax(h, 1.0);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Vector x = rng.normal_vector(2);
    EXPECT_EQ(r.apply(x), h.apply(x));
  }
}

TEST(Relax, ReflectionAndUnderRelaxation) {
  const HalfSpace h(v2(1, 0), 0.0);
  expect_vec_near(relax(h, 2.0).apply(v2(1, 0)), v2(-1, 0), 0.0);
  expect_vec_near(relax(h, 0.5).apply(v2(1, 0)), v2(0.5, 0), 0.0);
}

TEST(Relax, OutOfRangeAlphaRejected) {
  const HalfSpace h(v2(1, 0), 0.0);
  EXPECT_THROW(relax(h, 0.0), InvalidParameterError);
  EXPECT_THROW(relax(h, 2.5), InvalidParameterError);
  EXPECT_THROW(relax(h, -1.0), InvalidParameterError);
}

TEST(CutterFromAveraged, Examples) {
  const Cutter id = cutter_from_averaged([](const Vector& x) { return x; }, 0.5);
  EXPECT_EQ(id.apply(v2(3, -2)), v2(3, -2));

  const Ball b(v2(0, 0), 1.0);
  const Cutter pc = cutter_from_averaged([&](const Vector& x) { return b.apply(x); }, 0.5);
  expect_vec_near(pc.apply(v2(3, 4)), b.apply(v2(3, 4)), 1e-15);

  const HalfSpace h(v2(1, 0), 0.0);
  auto V = [&](const Vector& x) { return Vector(x + 0.25 * (h.apply(x) - x)); };
  expect_vec_near(V(v2(1, 0)), v2(0.75, 0), 0.0);
  expect_vec_near(cutter_from_averaged(V, 0.25).apply(v2(1, 0)), v2(0.5, 0), 1e-15);
}

TEST(CutterFromAveraged, InvalidEtaRejected) {
  auto V = [](const Vector& x) { return x; };
  EXPECT_THROW(cutter_from_averaged(V, 0.0), InvalidParameterError);
  EXPECT_THROW(cutter_from_averaged(V, 1.0), InvalidParameterError);
}

// Property tests on random data.

namespace {

struct Sample {
  Cutter u;
  std::function<Vector(Rng&)> fixed_point;  // draws z with proximity(z) = 0
};

std::vector<Sample> random_cutters(Rng& rng, Eigen::Index n) {
  std::vector<Sample> out;
  const Vector a = rng.normal_vector(n);
  const double b = rng.normal();
  const HalfSpace h(a, b);
  out.push_back({Cutter(h), [h](Rng& r) {
                   Vector z = 5.0 * r.normal_vector(h.dim());
                   return h.proximity(z) > 0.0 ? Vector(h.apply(z) - r.uniform() * h.normal()) : z;
                 }});
  const Hyperplane hp(a, b);
  out.push_back({Cutter(hp), [hp](Rng& r) { return Vector(hp.apply(5.0 * r.normal_vector(hp.dim()))); }});
  const Ball ball(rng.normal_vector(n), rng.uniform(0.5, 3.0));
  out.push_back({Cutter(ball), [ball](Rng& r) { return r.in_ball(ball.center(), ball.radius()); }});
  const Vector c = rng.normal_vector(n);
  const double rad = rng.uniform(0.5, 3.0);
  const auto q = SublevelSet::quadratic_ball(c, rad);
  out.push_back({Cutter(q), [c, rad](Rng& r) { return r.in_ball(c, rad); }});
  return out;
}

}  // namespace

TEST(CutterProperties, CutterInequalityAndStrongQuasiNonexpansiveness) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + trial % 5);
    for (const auto& s : random_cutters(rng, n)) {
      const Vector x = 6.0 * rng.normal_vector(n);
      const Vector ux = s.u.apply(x);
      for (int j = 0; j < 5; ++j) {
        const Vector z = s.fixed_point(rng);
        ASSERT_LE(s.u.proximity(z), 1e-9);
        const double scale = std::max(1.0, (x - z).squaredNorm());
        EXPECT_LE((x - ux).dot(z - ux), 1e-10 * scale);
        EXPECT_LE((ux - z).squaredNorm(), (x - z).squaredNorm() - (ux - x).squaredNorm() + 1e-10 * scale);
      }
    }
  }
}

TEST(CutterProperties, RelaxationIsStronglyQuasiNonexpansive) {
  Rng rng(99);
  for (double alpha : {0.25, 0.5, 1.0, 1.5, 1.9}) {
    const double rho = (2.0 - alpha) / alpha;
    for (int trial = 0; trial < 100; ++trial) {
      const auto n = static_cast<Eigen::Index>(1 + trial % 5);
      for (const auto& s : random_cutters(rng, n)) {
        const Cutter r = relax(s.u, alpha);
        const Vector x = 6.0 * rng.normal_vector(n);
        const Vector rx = r.apply(x);
        const Vector z = s.fixed_point(rng);
        const double scale = std::max(1.0, (x - z).squaredNorm());
        EXPECT_LE((rx - z).squaredNorm(), (x - z).squaredNorm() - rho * (rx - x).squaredNorm() + 1e-10 * scale);
      }
    }
  }
}

TEST(CutterProperties, DisplacementBoundedByDistanceForProjections) {
  // ||P x - x|| = d(x, C) for metric projections and <= d(x, C) for cutters.
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + trial % 5);
    const HalfSpace h(rng.normal_vector(n), rng.normal());
    const Ball b(rng.normal_vector(n), rng.uniform(0.5, 2.0));
    const Vector x = 4.0 * rng.normal_vector(n);
    EXPECT_NEAR((h.apply(x) - x).norm(), h.distance(x), 1e-12 * std::max(1.0, x.norm()));
    EXPECT_NEAR((b.apply(x) - x).norm(), b.distance(x), 1e-12 * std::max(1.0, x.norm()));
    const auto q = SublevelSet::quadratic_ball(b.center(), b.radius());
    EXPECT_LE((q.apply(x) - x).norm(), b.distance(x) + 1e-12);
  }
}

TEST(CutterProperties, ProximitySandwichForHalfSpaces) {
  // delta d(x, C) <= p(x) <= Delta ||P x - x|| with delta = Delta = ||a||.
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + trial % 5);
    const HalfSpace h(rng.normal_vector(n), rng.normal());
    const double na = h.normal().norm();
    const Vector x = 4.0 * rng.normal_vector(n);
    const double tol = 1e-12 * std::max(1.0, h.proximity(x));
    EXPECT_LE(na * h.distance(x), h.proximity(x) + tol);
    EXPECT_LE(h.proximity(x), na * (h.apply(x) - x).norm() + tol);
  }
}

TEST(CutterProperties, RandomProjectionsAgreeWithBruteForce) {
  Rng rng(31);
  Rng search(32);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + trial % 4);
    const Vector a = rng.normal_vector(n);
    const double b = rng.normal();
    const Vector x = 3.0 * rng.normal_vector(n);
    const auto hs = oracle::brute_halfspace(a, b, x, search);
    EXPECT_NEAR((project_halfspace(HalfSpace(a, b), x) - hs.point).norm(), 0.0, 1e-5);
    const auto hp = oracle::brute_hyperplane(a, b, x, search);
    EXPECT_NEAR((project_hyperplane(Hyperplane(a, b), x) - hp.point).norm(), 0.0, 1e-5);
    const Vector c = rng.normal_vector(n);
    const double r = rng.uniform(0.3, 2.0);
    const auto bb = oracle::brute_ball(c, r, x, search);
    EXPECT_NEAR((project_ball(Ball(c, r), x) - bb.point).norm(), 0.0, 1e-4);
  }
}

TEST(CutterConcept, TypeErasedCutterForwards) {
  const Cutter c(Ball(v2(0, 0), 1.0));
  EXPECT_TRUE(contains(c, v2(0.5, 0)));
  EXPECT_FALSE(contains(c, v2(2, 0)));
  EXPECT_DOUBLE_EQ(proximity(c, v2(3, 0)), 2.0);
  const Cutter g = Cutter::from_operator([](const Vector& x) { return Vector(0.5 * x); });
  EXPECT_DOUBLE_EQ(g.proximity(v2(2, 0)), 1.0);
}
