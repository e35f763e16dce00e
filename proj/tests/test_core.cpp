#include "sri/core.hpp"
#include "sri/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace sri;

TEST(ScheduleValue, FirstStepOfBenchmarkLaw) {
  EXPECT_DOUBLE_EQ(schedule_value(StepSchedule(0.01, 0.6), 1), 0.01);
}

TEST(ScheduleValue, HarmonicTenth) {
  EXPECT_DOUBLE_EQ(schedule_value(StepSchedule(1.0, 1.0), 10), 0.1);
}

TEST(ScheduleValue, MatchesExtendedPrecisionPower) {
  // Oracle: long-double evaluation, then rounded.
  const long double ref = 0.01L * std::pow(100000.0L, -0.6L);
  const double got = schedule_value(StepSchedule(0.01, 0.6), 100000);
  EXPECT_NEAR(got, static_cast<double>(ref), 4e-16 * static_cast<double>(ref));
  EXPECT_NEAR(got, 1e-5, 1e-18); // 1e5^-0.6 = 1e-3
}

TEST(ScheduleValue, IndexZeroIsDomainError) {
  EXPECT_THROW(schedule_value(StepSchedule(0.01, 0.6), 0), DomainError);
}

TEST(ScheduleValue, StrictlyDecreasingAndPositive) {
  const StepSchedule s(0.01, 0.6);
  for (std::uint64_t n = 1; n < 5000; ++n) {
    ASSERT_GT(s.value(n), 0.0);
    ASSERT_GT(s.value(n), s.value(n + 1));
  }
}

TEST(ScheduleValue, RejectsBadParameters) {
  EXPECT_THROW(StepSchedule(0.0, 0.6), ConfigError);
  EXPECT_THROW(StepSchedule(1.0, -0.1), ConfigError);
  EXPECT_THROW(StepSchedule(std::nan(""), 0.6), ConfigError);
}

TEST(RobbinsMonro, Verdicts) {
  EXPECT_EQ(robbins_monro_verdict(StepSchedule(0.01, 0.6)), RobbinsMonroVerdict::admissible);
  EXPECT_EQ(robbins_monro_verdict(StepSchedule(1.0, 1.0)), RobbinsMonroVerdict::admissible);
  EXPECT_EQ(robbins_monro_verdict(StepSchedule(1.0, 0.4)),
            RobbinsMonroVerdict::divergent_sum_of_squares);
  EXPECT_EQ(robbins_monro_verdict(StepSchedule(1.0, 0.5)),
            RobbinsMonroVerdict::divergent_sum_of_squares);
  EXPECT_EQ(robbins_monro_verdict(StepSchedule(1.0, 1.5)), RobbinsMonroVerdict::summable);
}

TEST(Clock, StartsAtZero) { EXPECT_EQ(clock(StepSchedule(0.01, 0.6), 0), 0.0); }

TEST(Clock, ZeroBasedConventionGivesOneAndAHalf) {
  EXPECT_DOUBLE_EQ(clock(StepSchedule(1.0, 1.0), 2), 1.5);
}

TEST(Clock, IncrementsAreTheSteps) {
  const StepSchedule s(0.01, 0.6);
  for (std::uint64_t n = 0; n < 2000; ++n)
    ASSERT_NEAR(s.clock(n + 1) - s.clock(n), s.alpha(n), 1e-15);
}

TEST(Clock, GrowsWithoutBoundToAMillion) {
  const StepSchedule s(1.0, 1.0);
  long double direct = 0.0L;
  double prev = 0.0;
  for (std::uint64_t n = 1; n <= 1000000; ++n) {
    direct += 1.0L / static_cast<long double>(n);
    if (n % 1000 == 0) {
      const double t = s.clock(n);
      ASSERT_GT(t, prev);
      prev = t;
    }
  }
  EXPECT_NEAR(s.clock(1000000), static_cast<double>(direct), 1e-11);
  EXPECT_GT(s.clock(1000000), 14.0);
}

TEST(Clock, CopiesShareTheCache) {
  const StepSchedule a(0.01, 0.6);
  const StepSchedule b = a;
  EXPECT_DOUBLE_EQ(a.clock(1000), b.clock(1000));
}

TEST(Clock, StepsToCoverIsTheSmallestCoveringCount) {
  const StepSchedule s(0.01, 0.6);
  for (std::uint64_t n : {0ULL, 10ULL, 1000ULL}) {
    for (double T : {0.05, 0.3, 1.0}) {
      const auto m = s.steps_to_cover(n, T);
      EXPECT_GE(s.clock(n + m), s.clock(n) + T - 1e-12);
      ASSERT_GT(m, 0u);
      EXPECT_LT(s.clock(n + m - 1), s.clock(n) + T);
    }
  }
}

TEST(Clock, IndexAtTimeInvertsTheClock) {
  const StepSchedule s(0.5, 0.7);
  for (std::uint64_t n : {0ULL, 1ULL, 7ULL, 123ULL, 4567ULL}) {
    EXPECT_EQ(s.index_at_time(s.clock(n)), n);
    const double mid = 0.5 * (s.clock(n) + s.clock(n + 1));
    EXPECT_EQ(s.index_at_time(mid), n);
  }
  EXPECT_THROW(s.index_at_time(-1.0), RangeError);
}

namespace {

Trace random_trace(std::size_t N, std::uint64_t seed) {
  Trace tr(StepSchedule(0.3, 0.6), seed);
  RandomSource rng(seed);
  for (std::size_t n = 0; n <= N; ++n)
    tr.points.push_back(rng.normal_vector(3));
  return tr;
}

} // namespace

TEST(Interpolate, GridPointsAreExact) {
  const Trace tr = random_trace(50, 3);
  for (std::size_t n = 0; n <= 50; ++n)
    EXPECT_EQ((interpolate(tr, tr.time(n)) - tr.points[n]).norm(), 0.0) << n;
}

TEST(Interpolate, MidpointIsTheAverage) {
  const Trace tr = random_trace(50, 4);
  for (std::size_t n = 0; n < 50; ++n) {
    const double t = 0.5 * (tr.time(n) + tr.time(n + 1));
    const Point expect = 0.5 * (tr.points[n] + tr.points[n + 1]);
    EXPECT_LT((interpolate(tr, t) - expect).norm(), 1e-12);
  }
}

TEST(Interpolate, MatchesAffineFormulaAtRandomTimes) {
  const Trace tr = random_trace(200, 5);
  RandomSource rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<std::size_t>(rng.uniform(0.0, 200.0));
    const double t0 = tr.time(n), t1 = tr.time(n + 1);
    const double w = rng.uniform();
    const double t = t0 + w * (t1 - t0);
    // Independent evaluation: weights on both endpoints.
    const double lam = (t - t0) / (t1 - t0);
    const Point expect = (1.0 - lam) * tr.points[n] + lam * tr.points[n + 1];
    ASSERT_LT((interpolate(tr, t) - expect).norm(), 1e-12);
  }
}

TEST(Interpolate, OutsideTheClockRangeIsARangeError) {
  const Trace tr = random_trace(10, 6);
  EXPECT_THROW(interpolate(tr, -1e-9), RangeError);
  EXPECT_THROW(interpolate(tr, tr.time(10) + 1e-9), RangeError);
}

TEST(Interpolate, LipschitzWithinASegment) {
  const Trace tr = random_trace(100, 7);
  RandomSource rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto n = static_cast<std::size_t>(rng.uniform(0.0, 100.0));
    const double t0 = tr.time(n), t1 = tr.time(n + 1);
    const double a = rng.uniform(t0, t1), b = rng.uniform(t0, t1);
    const double slope = (tr.points[n + 1] - tr.points[n]).norm() / tr.alpha(n);
    ASSERT_LE((interpolate(tr, a) - interpolate(tr, b)).norm(),
              slope * std::abs(a - b) * (1 + 1e-9) + 1e-14);
  }
}

TEST(PointSeries, StoresAndRejectsMismatchedDimension) {
  PointSeries s;
  s.push_back(make_point({1.0, 2.0}));
  s.push_back(make_point({3.0, 4.0}));
  EXPECT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1][0], 3.0);
  EXPECT_THROW(s.push_back(make_point({1.0})), DomainError);
}

TEST(RequireFinite, RejectsNonFiniteAndEmptyPoints) {
  EXPECT_THROW(require_finite(make_point({1.0, std::nan("")}), "x"), DomainError);
  EXPECT_THROW(require_finite(Point(), "x"), DomainError);
  EXPECT_NO_THROW(require_finite(make_point({1.0, 2.0}), "x"));
}

TEST(RandomSource, IdenticalSeedsGiveIdenticalSequences) {
  RandomSource a(42), b(42);
  for (int i = 0; i < 100; ++i)
    ASSERT_EQ(a.normal(), b.normal());
}

TEST(RandomSource, CellStreamsDiffer) {
  std::set<double> firsts;
  for (std::uint64_t seed : {1ULL, 2ULL})
    for (double lambda : {0.05, 0.1})
      for (std::uint64_t rep : {0ULL, 1ULL})
        firsts.insert(RandomSource::for_cell(seed, lambda, rep).normal());
  EXPECT_EQ(firsts.size(), 8u);
}

TEST(RandomSource, SplitIsDeterministicAndDistinct) {
  RandomSource a(5), b(5);
  auto a1 = a.split(), a2 = a.split();
  auto b1 = b.split();
  const double x = a1.uniform();
  EXPECT_EQ(x, b1.uniform());
  EXPECT_NE(x, a2.uniform());
}
