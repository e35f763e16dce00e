#include "sri/certify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace sri;

namespace {

SamplingPlan plan2(double radius, std::uint64_t seed = 1, Point center = Point()) {
  SamplingPlan p;
  p.dimension = 2;
  p.radius = radius;
  p.seed = seed;
  p.center = std::move(center);
  return p;
}

VectorField negate() {
  return [](const Point &x) { return Point(-x); };
}

} // namespace

TEST(SamplePoints, IncludeCenterShellsAndRandomPoints) {
  auto plan = plan2(3.0);
  plan.shells = 4;
  plan.directions = 8;
  plan.random_points = 50;
  const auto pts = sample_points(plan);
  ASSERT_EQ(pts.size(), 1u + 4u * 8u + 50u);
  EXPECT_EQ(pts[0].norm(), 0.0);
  for (const auto &x : pts)
    EXPECT_LE(x.norm(), 3.0 + 1e-12);
}

TEST(IssDissipation, StableLinearFieldPasses) {
  const auto L = half_squared_norm(2);
  const VectorField h = negate();
  // margin is (r - eps)^2 / 2 >= 0
  const auto r = check_iss_dissipation(L, std::span<const VectorField>(&h, 1), 0.3, plan2(5.0));
  EXPECT_TRUE(r.passed());
  EXPECT_GE(r.worst_margin, -1e-12);
  EXPECT_NE(r.summary().find("numerically consistent on"), std::string::npos);
}

TEST(IssDissipation, OriginIsTightWithoutBias) {
  const auto L = half_squared_norm(2);
  const VectorField h = negate();
  const auto r = check_iss_dissipation(L, std::span<const VectorField>(&h, 1), 0.0, plan2(5.0));
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.worst_margin, 0.0);
}

TEST(IssDissipation, UnstableFieldFailsWithAVerifiedWitness) {
  const auto L = half_squared_norm(2);
  const VectorField h = [](const Point &x) { return Point(x); };
  const double eps = 0.1;
  const auto r = check_iss_dissipation(L, std::span<const VectorField>(&h, 1), eps, plan2(5.0));
  ASSERT_FALSE(r.passed());
  ASSERT_FALSE(r.witness.empty());
  // Re-evaluate the witness independently.
  const Point &w = r.witness[0];
  const double lhs = w.dot(h(w)) + eps * w.norm();
  const double rhs = -0.5 * w.squaredNorm() + 0.5 * eps * eps;
  EXPECT_LT(rhs - lhs, 0.0);
  EXPECT_NEAR(rhs - lhs, r.witness_margin[0], 1e-9);
  // Refinement pushes the witness to the sampling boundary.
  EXPECT_NEAR(w.norm(), 5.0, 1e-6);
}

TEST(IssDissipation, AdversarialBiasIsTheWorstCase) {
  const auto L = half_squared_norm(2);
  const VectorField h = [](const Point &x) { return make_point({-x[0] + 0.3 * x[1], -x[1]}); };
  const double eps = 0.2;
  const auto r = check_iss_dissipation(L, std::span<const VectorField>(&h, 1), eps, plan2(3.0));
  RandomSource rng(3);
  for (int i = 0; i < 10; ++i) {
    const Point x = rng.in_ball(2, 3.0);
    const double adversarial = x.dot(h(x)) + eps * x.norm();
    for (int k = 0; k < 1000; ++k) {
      const Point b = rng.in_ball(2, eps);
      ASSERT_LE(x.dot(h(x) + b), adversarial + 1e-12);
    }
  }
  EXPECT_EQ(r.passed(), r.worst_margin >= -1e-12);
}

TEST(IssDissipation, SetValuedFieldUsesEverySelection) {
  const auto L = half_squared_norm(1);
  const std::vector<VectorField> hs{negate(), [](const Point &x) { return Point(0.1 * x); }};
  SamplingPlan p;
  p.dimension = 1;
  p.radius = 2.0;
  EXPECT_TRUE(check_iss_dissipation(L, std::span<const VectorField>(hs.data(), 1), 0.0, p).passed());
  EXPECT_FALSE(check_iss_dissipation(L, std::span<const VectorField>(hs), 0.0, p).passed());
}

TEST(QuadraticSandwich, HalfSquaredNormFitsInsideLooseBounds) {
  auto L = half_squared_norm(2);
  L.a_low = 0.4;
  L.a_high = 0.6;
  EXPECT_TRUE(check_quadratic_sandwich(L, plan2(4.0)).passed());
}

TEST(QuadraticSandwich, QuarticFails) {
  auto L = half_squared_norm(2);
  L.V = [](const Point &x) { return x.squaredNorm() * x.squaredNorm(); };
  L.a_low = 0.4;
  L.a_high = 0.6;
  const auto r = check_quadratic_sandwich(L, plan2(4.0));
  EXPECT_FALSE(r.passed());
}

TEST(QuadraticSandwich, FitBracketsTheTrueRatio) {
  const auto [lo, hi] =
      fit_quadratic_sandwich([](const Point &x) { return 0.5 * x[0] * x[0] + 2.0 * x[1] * x[1]; },
                             plan2(3.0));
  EXPECT_LE(lo, 0.5);
  EXPECT_GE(lo, 0.5 * 0.95 - 1e-9);
  EXPECT_GE(hi, 2.0);
  EXPECT_LE(hi, 2.0 * 1.05 + 1e-9);
}

TEST(Lipschitz, LinearMapNeverExceedsTheSpectralNorm) {
  Eigen::MatrixXd A(2, 2);
  A << 2.0, 1.0, -0.5, 0.3;
  const double spec = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
  const double est = estimate_lipschitz([A](const Point &x) -> Point { return A * x; }, plan2(2.0),
                                        20000);
  EXPECT_LE(est, spec * (1 + 1e-12));
  EXPECT_GE(est, 0.95 * spec);
}

TEST(Lipschitz, BenchmarkGradientIsBelowThree) {
  const auto p = problems::f1();
  const double est = estimate_lipschitz(p.gradient, plan2(5.0), 20000);
  EXPECT_LE(est, 3.0);
  EXPECT_GE(est, 2.9);
}

TEST(Lipschitz, ConstantFieldIsZero) {
  EXPECT_EQ(estimate_lipschitz([](const Point &) { return make_point({1.0, 2.0}); }, plan2(2.0),
                               1000),
            0.0);
}

TEST(Pl, SpherePassesBelowTwoAndFailsAbove) {
  const auto p = problems::sphere(2);
  EXPECT_TRUE(check_pl(p, 1.0, plan2(5.0)).passed());
  EXPECT_TRUE(check_pl(p, 2.0, plan2(5.0)).passed());
  EXPECT_FALSE(check_pl(p, 2.5, plan2(5.0)).passed());
}

TEST(Pl, DoubleWellFailsNearItsRidge) {
  const auto p = problems::f2();
  const auto r = check_pl(p, 0.1, plan2(3.0));
  ASSERT_FALSE(r.passed());
  const Point &w = r.witness[0];
  // Refinement slides to the saddle at x1 = 0, where the gradient vanishes.
  EXPECT_LT(std::abs(w[0]), 0.05);
  const double margin = 0.5 * p.gradient(w).squaredNorm() - 0.1 * (p.value(w) - p.optimum_value);
  EXPECT_LT(margin, 0.0);
}

TEST(Pl, FittedConstantVerifiesOnFreshSamples) {
  const auto p = problems::f1();
  const double mu = fit_pl_mu(p, plan2(5.0, 1));
  ASSERT_GT(mu, 0.0);
  auto verify = plan2(5.0, 2);
  verify.directions += 7;
  EXPECT_TRUE(check_pl(p, mu, verify).passed());
}

TEST(Pl, ChainWithGrowthAndSmoothness) {
  // PL(mu) with L-smoothness forces mu <= L and f - f* >= (mu/2) ||x - x*||^2.
  const auto p = problems::f1();
  const double mu = fit_pl_mu(p, plan2(5.0, 1), 0.0);
  SamplingPlan g = plan2(5.0, 1, *p.minimizer);
  const auto [r1, r2] = fit_quadratic_growth(p, g, 0.0);
  EXPECT_LE(mu, *p.constants.lipschitz);
  EXPECT_GE(r1, 0.5 * mu - 1e-9);
  EXPECT_LE(r2, 0.5 * *p.constants.lipschitz + 1e-9);
}

TEST(Pl, NeedsAGradient) {
  EXPECT_THROW(check_pl(problems::l1_norm(2), 1.0, plan2(1.0)), CapabilityError);
}

TEST(QuadraticGrowth, QuadraticPassesWithItsOwnConstants) {
  Eigen::MatrixXd A(2, 2);
  A << 2.0, 0.5, 0.5, 1.0;
  const auto p = problems::quadratic(A, make_point({1.0, -1.0}));
  SamplingPlan g = plan2(4.0, 1, *p.minimizer);
  EXPECT_TRUE(
      check_quadratic_growth(p, *p.constants.growth_low, *p.constants.growth_high, g).passed());
  EXPECT_FALSE(check_quadratic_growth(p, *p.constants.growth_low * 1.2, *p.constants.growth_high, g)
                   .passed());
}

TEST(QuadraticGrowth, DoubleWellFails) {
  const auto p = problems::f2();
  // the mirror minimizer has zero gap at positive distance
  EXPECT_FALSE(check_quadratic_growth(p, 0.1, 10.0, plan2(3.0)).passed());
}

TEST(StrongMonotonicity, QuadraticPassesAtItsSmallestEigenvalue) {
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 0.0, 0.0, 3.0;
  const auto p = problems::quadratic(A, Point::Zero(2));
  EXPECT_TRUE(check_strong_monotonicity(p, 1.0, plan2(3.0), 2000).passed());
  EXPECT_FALSE(check_strong_monotonicity(p, 1.5, plan2(3.0), 2000).passed());
}

TEST(StrongMonotonicity, LinearAndL1Fail) {
  EXPECT_FALSE(
      check_strong_monotonicity(problems::linear(make_point({1.0, 2.0})), 0.1, plan2(3.0), 2000)
          .passed());
  EXPECT_FALSE(check_strong_monotonicity(problems::l1_norm(2), 0.1, plan2(3.0), 2000).passed());
  EXPECT_TRUE(check_strong_monotonicity(problems::l1_norm(2), 0.0, plan2(3.0), 2000).passed());
}

TEST(StrongMonotonicity, RestrictedToADomain) {
  const auto S = ConvexSet::box(make_point({0.0, 0.0}), make_point({1.0, 1.0}));
  const auto r = check_strong_monotonicity(problems::sphere(2), 2.0, plan2(3.0), 1000, &S);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.samples_checked, 1000u);
}

TEST(Marchaud, BoundedFieldPasses) {
  const std::vector<VectorField> hs{[](const Point &) { return make_point({3.0, 4.0}); }};
  EXPECT_TRUE(check_marchaud_growth(hs, 5.0, plan2(10.0)).passed());
  EXPECT_FALSE(check_marchaud_growth(hs, 4.0, plan2(10.0)).passed());
}

TEST(Marchaud, CubicGrowthFails) {
  const std::vector<VectorField> hs{
      [](const Point &x) { return Point(4.0 * x.squaredNorm() * x); }};
  const auto r = check_marchaud_growth(hs, 10.0, plan2(5.0));
  EXPECT_FALSE(r.passed());
  EXPECT_FALSE(r.note.empty());
}

TEST(Marchaud, ZeroFieldPasses) {
  const std::vector<VectorField> hs{[](const Point &x) { return Point(Point::Zero(x.size())); }};
  EXPECT_TRUE(check_marchaud_growth(hs, 1e-9, plan2(5.0)).passed());
}

TEST(NoiseMoment, ZeroNoisePasses) {
  const NoiseSampler zero = [](const Point &x, RandomSource &) { return Point(Point::Zero(x.size())); };
  const std::vector<Point> pts{make_point({0.0, 0.0}), make_point({1.0, 1.0})};
  const auto r = check_noise_moment(zero, 0.0, pts, 100);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.worst_margin, 0.0);
}

TEST(NoiseMoment, BenchmarkEstimatorScalesAsInverseLambdaSquared) {
  // E||M||^2 ~ d (var + mean gap^2) / (4 lambda^2) = 2 (2 + 16) / (4 lambda^2) = 9 / lambda^2.
  const auto p = problems::f1();
  ZoEstimatorConfig cfg;
  cfg.lambda = 0.05;
  cfg.noise = {5.0, 1.0, 1.0};
  const auto noise = zo_noise_sampler(p, cfg);
  const std::vector<Point> pts{make_point({1.0, 1.0}), make_point({-1.0, 0.5}),
                               make_point({0.0, 0.0})};
  const double K = 9.0 / (cfg.lambda * cfg.lambda);
  EXPECT_TRUE(check_noise_moment(noise, 1.1 * K, pts, 4000, 1).passed());
  EXPECT_FALSE(check_noise_moment(noise, 0.9 * K, pts, 4000, 1).passed());
}

TEST(NoiseMoment, HeavyTailsAreFlagged) {
  const NoiseSampler cauchy = [](const Point &x, RandomSource &rng) {
    Point m(x.size());
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m[i] = std::tan(M_PI * (rng.uniform() - 0.5));
    return m;
  };
  std::vector<Point> pts;
  for (int i = 0; i < 10; ++i)
    pts.push_back(make_point({0.1 * i, 0.0}));
  const auto r = check_noise_moment(cauchy, 10.0, pts, 5000, 2);
  EXPECT_FALSE(r.passed());
}

TEST(ProjectedMinimizer, ClampsTheUnconstrainedOptimum) {
  const auto S = ConvexSet::box(make_point({0.5, -1.0}), make_point({2.0, 1.0}));
  const Point xs = projected_minimizer(problems::sphere(2), S, make_point({1.5, 0.5}));
  EXPECT_LT((xs - make_point({0.5, 0.0})).norm(), 1e-10);
}

TEST(IssConstrained, StronglyConvexOnABoxPasses) {
  const auto S = ConvexSet::box(make_point({0.5, 0.5}), make_point({2.0, 2.0}));
  const auto r = check_iss_constrained(problems::sphere(2), S, 2.0, 0.1, 2000, 1);
  EXPECT_TRUE(r.passed()) << r.worst_margin;
}

TEST(IssConstrained, MonotonicityZeroFails) {
  const auto S = ConvexSet::box(make_point({0.0, 0.0}), make_point({1.0, 1.0}));
  const auto r = check_iss_constrained(problems::linear(make_point({1.0, 1.0})), S, 0.0, 0.1, 500, 1);
  EXPECT_FALSE(r.passed());
  EXPECT_NE(r.note.find("no negative-definite term"), std::string::npos);
  ASSERT_FALSE(r.witness.empty());
}

TEST(IssConstrained, ExplicitMinimizerIsUsed) {
  const auto S = ConvexSet::ball(Point::Zero(2), 1.0);
  const auto p = problems::quadratic(Eigen::MatrixXd::Identity(2, 2), make_point({-3.0, 0.0}));
  // constrained minimizer is the boundary point (1, 0)
  const auto good = check_iss_constrained(p, S, 1.0, 0.05, 2000, 3, make_point({1.0, 0.0}));
  EXPECT_TRUE(good.passed()) << good.worst_margin;
  const auto bad = check_iss_constrained(p, S, 1.0, 0.0, 2000, 3, make_point({-1.0, 0.0}));
  EXPECT_FALSE(bad.passed());
}

TEST(Report, JsonCarriesVerdictAndWitnesses) {
  const auto L = half_squared_norm(2);
  const VectorField h = [](const Point &x) { return Point(x); };
  const auto r = check_iss_dissipation(L, std::span<const VectorField>(&h, 1), 0.0, plan2(1.0));
  const nlohmann::json j = r;
  EXPECT_EQ(j.at("verdict"), "fail");
  EXPECT_EQ(j.at("assumption"), "iss_dissipation");
  EXPECT_FALSE(j.at("witness").empty());
  EXPECT_EQ(j.at("witness")[0].at("point").size(), 2u);
}
