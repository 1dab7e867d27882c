#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dobrushin/families.hpp"
#include "dobrushin/exact.hpp"
#include "dobrushin/monte_carlo.hpp"
#include "dobrushin/random_schedule.hpp"

using namespace dobrushin;

namespace {

Schedule example2(std::size_t n) {
  ExampleOptions opt;
  opt.observable = BoundedFunction::indicator(4, 3);
  return build_example(2, n, opt);
}

std::vector<double> gaussian(std::size_t m, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return v;
}

double skew_of(const std::vector<double>& x) {
  const double m = static_cast<double>(x.size());
  double mu = 0.0;
  for (double v : x) mu += v / m;
  double c2 = 0.0, c3 = 0.0;
  for (double v : x) {
    c2 += (v - mu) * (v - mu) / m;
    c3 += (v - mu) * (v - mu) * (v - mu) / m;
  }
  return c3 / std::pow(c2, 1.5);
}

double jackknife(const std::vector<double>& reps) {
  const double m = static_cast<double>(reps.size());
  double mu = 0.0;
  for (double v : reps) mu += v / m;
  double ss = 0.0;
  for (double v : reps) ss += (v - mu) * (v - mu);
  return std::sqrt((m - 1.0) / m * ss);
}

}  // namespace

TEST(Simulate, BitIdenticalAcrossRunsAndWorkerCounts) {
  const Schedule s = example2(2000);
  const auto a = simulate(s, 3000, 99, {1});
  const auto b = simulate(s, 3000, 99, {1});
  const auto c = simulate(s, 3000, 99, {7});
  EXPECT_EQ(a.normalized_sums, b.normalized_sums);
  EXPECT_EQ(a.normalized_sums, c.normalized_sums);
  EXPECT_NE(a.normalized_sums, simulate(s, 3000, 100, {1}).normalized_sums);
}

TEST(Simulate, PrefixStableInReps) {
  const Schedule s = example2(500);
  const auto a = simulate(s, 1000, 5, {3});
  const auto b = simulate(s, 2000, 5, {2});
  EXPECT_TRUE(std::equal(a.normalized_sums.begin(), a.normalized_sums.end(), b.normalized_sums.begin()));
}

// One step, fair start, indicator of state 1: replication r is 1{u < 1/2} for
// the first uniform of stream(seed, r).
TEST(Simulate, FollowsTheSamplingContract) {
  const Schedule s =
      Schedule::homogeneous(1, {0.5, 0.5}, two_state_flip(0.5), BoundedFunction::indicator(2, 0), false);
  const auto b = simulate(s, 200, 1234, {2});
  for (std::size_t r = 0; r < 200; ++r) {
    Xoshiro256 rng = Xoshiro256::stream(1234, r);
    const double raw = rng.uniform() < 0.5 ? 1.0 : 0.0;
    EXPECT_EQ(b.normalized_sums[r], (raw - 0.5) / 0.5);
  }
}

TEST(Simulate, InputChecks) {
  const Schedule s = example2(100);
  EXPECT_THROW(simulate(s, 99, 1), InputError);
  const Schedule flat =
      Schedule::homogeneous(100, {0.5, 0.5}, two_state_flip(0.3), BoundedFunction::constant(2, 2.0), false);
  EXPECT_THROW(simulate(flat, 1000, 1), DegenerateError);
  EXPECT_THROW(simulate(flat, 1000, 1, {0, Normalization::plug_in}), DegenerateError);
}

TEST(Simulate, ExactNormalizationHasUnitMoments) {
  const auto b = simulate(example2(3000), 20000, 7);
  EXPECT_NEAR(b.summary.mean, 0.0, 5.0 / std::sqrt(20000.0));
  EXPECT_NEAR(b.summary.variance, 1.0, 0.05);
}

TEST(Simulate, PlugInNormalizationIsStandardized) {
  const auto b = simulate(example2(1000), 5000, 8, {0, Normalization::plug_in});
  EXPECT_NEAR(b.summary.mean, 0.0, 1e-12);
  EXPECT_NEAR(b.summary.variance, 1.0, 1e-12);
}

TEST(Summaries, KnownSample) {
  const std::vector<double> x{1, 2, 3, 4, 10};
  const auto s = summarize(x);
  EXPECT_DOUBLE_EQ(s.mean, 4.0);
  EXPECT_DOUBLE_EQ(s.variance, 12.5);
  EXPECT_NEAR(s.skewness, 36.0 / std::pow(10.0, 1.5), 1e-14);
}

TEST(Normality, VerdictThresholds) {
  EXPECT_EQ(normality_verdict(0.019), "consistent");
  EXPECT_EQ(normality_verdict(0.02), "indeterminate");
  EXPECT_EQ(normality_verdict(0.05), "indeterminate");
  EXPECT_EQ(normality_verdict(0.051), "inconsistent");
}

TEST(Normality, GaussianSampleIsConsistent) {
  const auto r = normality_report(gaussian(50000, 3));
  EXPECT_EQ(r.verdict, "consistent");
  EXPECT_LT(std::fabs(r.skewness), 4 * r.skewness_se);
  EXPECT_LT(std::fabs(r.excess_kurtosis), 4 * r.excess_kurtosis_se);
  EXPECT_THROW(normality_report(gaussian(9999, 3)), InputError);
}

TEST(Normality, JackknifeMatchesLeaveOneOut) {
  const auto x = gaussian(10000, 4);
  const auto r = normality_report(x);
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> ks(x.size()), sk(x.size()), rest;
  for (std::size_t i = 0; i < x.size(); ++i) {
    rest = sorted;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    ks[i] = ks_statistic_sorted(rest);
    rest = x;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    sk[i] = skew_of(rest);
  }
  EXPECT_NEAR(r.ks_se, jackknife(ks), 1e-9);
  EXPECT_NEAR(r.skewness_se, jackknife(sk), 1e-9);
}

TEST(Simulate, EmpiricalCdfWithinDkwOfExactLaw) {
  // 10^6 reps; DKW bound at failure probability 0.1%.
  Xoshiro256 rng(41);
  const Schedule s = random_schedule(rng, 3, 20, {0.0, true, false});
  const auto law = sum_distribution(s);
  const auto mv = exact_mean_var(s);
  const std::size_t reps = 1'000'000;
  const auto b = simulate(s, reps, 99);
  std::vector<double> counts(law.masses.size(), 0.0);
  const double sd = std::sqrt(mv.variance);
  for (double z : b.normalized_sums) {
    const double x = (mv.mean + sd * z - law.lattice_offset) / law.lattice_step;
    const auto j = static_cast<std::size_t>(std::llround(x));
    ASSERT_LT(j, counts.size());
    ASSERT_NEAR(x, static_cast<double>(j), 1e-6);
    counts[j] += 1.0;
  }
  double fe = 0.0, fx = 0.0, worst = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    fe += counts[j] / reps;
    fx += law.masses[j];
    worst = std::max(worst, std::fabs(fe - fx));
  }
  EXPECT_LT(worst, std::sqrt(std::log(2.0 / 0.001) / (2.0 * reps)));
}
