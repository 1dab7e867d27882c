#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "dobrushin/exact.hpp"
#include "dobrushin/families.hpp"
#include "dobrushin/oracle.hpp"
#include "dobrushin/random_schedule.hpp"
#include "dobrushin/stats.hpp"

using namespace dobrushin;

namespace {

// First m steps of s as a schedule of its own.
Schedule truncate(const Schedule& s, std::size_t m) {
  std::vector<StepRange> kr, fr;
  for (auto r : s.kernel_ranges()) {
    if (r.first > m - 1) break;
    r.last = std::min(r.last, m - 1);
    kr.push_back(r);
  }
  for (auto r : s.observable_ranges()) {
    if (r.first > m) break;
    r.last = std::min(r.last, m);
    fr.push_back(r);
  }
  const auto init = s.initial_law();
  return Schedule(m, {init.begin(), init.end()}, s.kernels(), kr, s.raw_observables(), fr, s.centered());
}

double rel(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

}  // namespace

TEST(ExactMeanVar, StreamingMatchesQuadraticFormula) {
  Xoshiro256 rng(31);
  for (int t = 0; t < 60; ++t) {
    const Schedule s = random_schedule(rng, rng.uniform_int(2, 6), rng.uniform_int(1, 60),
                                       {t % 3 == 0 ? 0.5 : 0.0, false, t % 2 == 0});
    EXPECT_LT(rel(exact_mean_var(s).variance, oracle::naive_variance(s)), 1e-12);
  }
}

TEST(ExactMeanVar, PartialSumsMatchTruncatedSchedule) {
  const auto bd = build_bd(1000, 1.0 / 3.0, false);
  for (std::size_t m : {2u, 9u, 10u, 11u, 500u}) {
    EXPECT_LT(rel(exact_mean_var(bd.schedule, 1, m).variance, exact_mean_var(truncate(bd.schedule, m)).variance), 1e-12)
        << m;
  }
}

TEST(ExactMeanVar, PerStepVariances) {
  const Schedule s = Schedule::homogeneous(20, {0.25, 0.75}, two_state_flip(0.5), BoundedFunction::indicator(2, 0), false);
  const MeanVar mv = exact_mean_var(s);
  EXPECT_NEAR(mv.per_step_var[0], 0.1875, 1e-15);
  for (std::size_t i = 1; i < 20; ++i) EXPECT_NEAR(mv.per_step_var[i], 0.25, 1e-15);
  // Q(1/2) makes X_2..X_n independent fair bits: 0.1875 + 19/4
  EXPECT_NEAR(mv.variance, 0.1875 + 19 * 0.25, 1e-13);
  EXPECT_NEAR(mv.mean, 0.25 + 19 * 0.5, 1e-13);
}

TEST(Decomposition, IdentityOnRandomAndBuiltinSchedules) {
  Xoshiro256 rng(32);
  for (int t = 0; t < 50; ++t) {
    const Schedule s = random_schedule(rng, rng.uniform_int(2, 6), rng.uniform_int(2, 80));
    const auto d = martingale_decomposition(s);
    EXPECT_LE(d.identity_error, kDecompositionTolerance);
  }
  for (int id = 1; id <= 4; ++id) EXPECT_TRUE(check_decomposition(build_example(id, 4096)).pass) << id;
  EXPECT_TRUE(check_decomposition(build_bd(4096, 1.0 / 3.0).schedule).pass);
}

TEST(Decomposition, NeedsCenteredSchedule) {
  const Schedule s = Schedule::homogeneous(5, {0.5, 0.5}, two_state_flip(0.2), BoundedFunction::indicator(2, 0), false);
  EXPECT_THROW(martingale_decomposition(s), InputError);
}

TEST(Decomposition, BackwardZAgrees) {
  Xoshiro256 rng(33);
  const Schedule s = random_schedule(rng, 4, 40);
  const auto d = martingale_decomposition(s);
  const auto Z = backward_Z(s);
  ASSERT_EQ(Z.size(), d.Z.size());
  for (std::size_t i = 0; i < Z.size(); ++i) EXPECT_DOUBLE_EQ(Z[i], d.Z[i]);
}

TEST(Prop3, HoldsOnRandomSchedules) {
  Xoshiro256 rng(34);
  for (int t = 0; t < 200; ++t) {
    const Schedule s = random_schedule(rng, rng.uniform_int(2, 6), rng.uniform_int(2, 60), {t % 4 == 0 ? 0.5 : 0.0});
    EXPECT_TRUE(check_prop3(s).pass) << t;
  }
}

TEST(Lemmas, HoldOnBuiltinSchedules) {
  for (int id = 1; id <= 4; ++id) {
    const Schedule s = build_example(id, 512);
    EXPECT_TRUE(check_lemma1(s, 400, 3).pass) << id;
    EXPECT_TRUE(check_lemma2(s).pass) << id;
  }
  const Schedule bd = build_bd(512, 1.0 / 3.0).schedule;
  EXPECT_TRUE(check_lemma1(bd, 400, 3).pass);
  EXPECT_TRUE(check_lemma2(bd).pass);
}

TEST(Lemmas, Lemma1CoversAllParityCases) {
  const auto r = check_lemma1(build_example(3, 1000), 400, 9);
  for (const char* c : {"case_a", "case_b", "case_c", "case_d"}) EXPECT_EQ(r.details.at(std::string("count_") + c), 100.0);
}

TEST(Lemmas, Lemma2NeedsPositiveTwoStepCoefficient) {
  const Schedule s = Schedule::homogeneous(10, {0.5, 0.5}, Kernel::identity(2), BoundedFunction::indicator(2, 0), true);
  EXPECT_THROW(check_lemma2(s), DegenerateError);
}

TEST(SumDistribution, MomentsMatchExactEngine) {
  Xoshiro256 rng(35);
  for (int t = 0; t < 20; ++t) {
    const Schedule s = random_schedule(rng, rng.uniform_int(2, 4), rng.uniform_int(2, 40), {0.0, true, t % 2 == 0});
    const auto d = sum_distribution(s);
    const auto mv = exact_mean_var(s);
    EXPECT_NEAR(d.total_mass(), 1.0, 1e-12);
    EXPECT_LT(rel(d.mean(), mv.mean), 1e-10);
    EXPECT_LT(rel(d.variance(), mv.variance), 1e-10);
  }
}

TEST(SumDistribution, SingleFairBit) {
  const Schedule s = Schedule::homogeneous(1, {0.5, 0.5}, two_state_flip(0.5), BoundedFunction::indicator(2, 0), false);
  const auto d = sum_distribution(s);
  ASSERT_EQ(d.masses.size(), 2u);
  EXPECT_DOUBLE_EQ(d.masses[0], 0.5);
  // normalized law is +-1 with mass 1/2: KS = Phi(1) - 1/2
  EXPECT_NEAR(ks_distance_to_normal(d, 0.5, 0.25), normal_cdf(1.0) - 0.5, 1e-15);
}

TEST(SumDistribution, BinomialFromIndependentSteps) {
  // Q(1/2) from a fair start: S_n ~ Binomial(n, 1/2).
  const std::size_t n = 12;
  const Schedule s = Schedule::homogeneous(n, {0.5, 0.5}, two_state_flip(0.5), BoundedFunction::indicator(2, 1), false);
  const auto d = sum_distribution(s);
  double c = 1.0;
  for (std::size_t j = 0; j <= n; ++j) {
    EXPECT_NEAR(d.masses[j], c / 4096.0, 1e-15);
    c = c * static_cast<double>(n - j) / static_cast<double>(j + 1);
  }
}

TEST(SumDistribution, RejectsNonLatticeAndOverBudget) {
  const Schedule s = Schedule::homogeneous(5, {0.5, 0.5}, two_state_flip(0.3),
                                           BoundedFunction(std::vector<double>{0.0, std::numbers::sqrt2}), false);
  EXPECT_NO_THROW(sum_distribution(s));
  const Schedule t(3, {0.5, 0.5}, {two_state_flip(0.3)}, {{1, 2, 0}},
                   {BoundedFunction(std::vector<double>{0.0, 1.0}), BoundedFunction(std::vector<double>{0.0, std::numbers::sqrt2})},
                   {{1, 1, 0}, {2, 3, 1}}, false);
  EXPECT_THROW(sum_distribution(t), InputError);
  EXPECT_THROW(sum_distribution(build_bd(1000, 1.0 / 3.0).schedule, 1000), InputError);
}

TEST(Lemma4, DecaysForExample2) {
  // Not monotone point to point; the trend over three decades is.
  ExampleOptions opt;
  opt.observable = BoundedFunction::indicator(4, 3);
  std::vector<double> ns, vals;
  for (std::size_t n = 1 << 10; n <= (1 << 20); n <<= 2) {
    ns.push_back(static_cast<double>(n));
    vals.push_back(lemma4_decay(build_example(2, n, opt)).max());
    EXPECT_GT(vals.back(), 0.0);
  }
  EXPECT_LT(vals.back(), vals.front() / 4);
  EXPECT_LT(loglog_slope(ns, vals), -0.1);
}
