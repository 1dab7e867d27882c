// Acceptance gate: one PASS/FAIL line per criterion, indented detail lines
// below it. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dobrushin.hpp"
#include "dobrushin/oracle.hpp"
#include "dobrushin/random_schedule.hpp"

using namespace dobrushin;

namespace {

int failures = 0;

void detail(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

void criterion(int id, const char* title, const std::function<bool()>& body) {
  std::printf("[%2d] %s\n", id, title);
  std::fflush(stdout);
  const auto t0 = std::chrono::steady_clock::now();
  const bool ok = body();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s criterion %d: %s (%.2f s)\n\n", verdict(ok), id, title, secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

bool within(double v, double target, double tol) { return std::fabs(v - target) <= tol; }

Schedule example2(std::size_t n) {
  // State 4 is the recurrent core of example 2; the default indicator of
  // state 1 is transient and its sum is far from Gaussian.
  ExampleOptions opt;
  opt.observable = BoundedFunction::indicator(4, 3);
  return build_example(2, n, opt);
}

constexpr std::size_t kReps = 50'000;

// ---------------------------------------------------------------------------

bool coefficient_correctness() {
  ExampleOptions opt;
  opt.beta = 0.2;
  const auto c1 = series_coefficients(build_example(1, 1000, opt));
  const bool ok1 = c1.alpha_n == 0.0 && within(c1.alpha2_n, 0.1, 1e-15);
  detail("example 1, beta=0.2: alpha_n=%.17g alpha2_n=%.17g (want 0 and 0.1, tol 1e-15)  %s", c1.alpha_n, c1.alpha2_n,
         verdict(ok1));

  bool ok4 = true;
  double worst = 0.0;
  for (std::size_t n = std::size_t{1} << 13; n <= (std::size_t{1} << 24); n <<= 1) {
    const double eps = default_eps(n);
    if (!(eps < default_beta(n) / 4)) continue;
    const double a = series_coefficients(build_example(4, n)).alpha_n;
    worst = std::max(worst, std::fabs(a - 4 * eps));
  }
  for (double eps : {0.01, 0.02, 0.05}) {
    ExampleOptions o;
    o.beta = 0.3;
    o.eps = eps;
    worst = std::max(worst, std::fabs(series_coefficients(build_example(4, 100, o)).alpha_n - 4 * eps));
  }
  ok4 = worst <= 1e-15;
  detail("example 4: max |alpha_n - 4 eps_n| = %.3g over n=2^13..2^24 and fixed (beta, eps) (tol 1e-15)  %s", worst,
         verdict(ok4));
  return ok1 && ok4;
}

bool definition_equivalence() {
  Xoshiro256 rng(2024);
  std::size_t dyadic_mismatch = 0;
  double general_worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = rng.uniform_int(2, 6);
    const Kernel d = random_dyadic_kernel(rng, k);
    if (md_delta(d).delta != oracle::subset_delta(d)) ++dyadic_mismatch;
    const Kernel g = random_kernel(rng, k, t % 3 == 0 ? 0.4 : 0.0);
    general_worst = std::max(general_worst, std::fabs(md_delta(g).delta - oracle::subset_delta(g)));
  }
  detail("500 dyadic kernels, |X| in 2..6: %zu bitwise mismatches (want 0)", dyadic_mismatch);
  detail("500 general kernels: max |half-L1 - subset sup| = %.3g (rounding only, tol 1e-15)", general_worst);
  return dyadic_mismatch == 0 && general_worst <= 1e-15;
}

bool submultiplicativity_contraction() {
  Xoshiro256 rng(77);
  std::size_t sub_viol = 0, osc_viol = 0;
  double sub_worst = -1.0, osc_worst = -1.0;
  std::vector<double> out;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = rng.uniform_int(2, 8);
    const double sp = t % 2 ? 0.5 : 0.0;
    const Kernel a = random_kernel(rng, k, sp);
    const Kernel b = random_kernel(rng, k, sp);
    const double gap = md_delta(compose(a, b)).delta - md_delta(a).delta * md_delta(b).delta;
    sub_worst = std::max(sub_worst, gap);
    if (gap > 1e-12) ++sub_viol;
  }
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = rng.uniform_int(2, 8);
    const Kernel a = random_kernel(rng, k, t % 2 ? 0.5 : 0.0);
    const BoundedFunction f = random_function(rng, k, 10.0);
    out.resize(k);
    apply_to_function(a, f.values(), out);
    const double gap = osc(out) - md_delta(a).delta * osc(f);
    osc_worst = std::max(osc_worst, gap);
    if (gap > 1e-12) ++osc_viol;
  }
  detail("1000 kernel pairs: %zu violations of delta(PQ) <= delta(P) delta(Q), worst gap %.3g (tol 1e-12)", sub_viol,
         sub_worst);
  detail("1000 (kernel, function) pairs: %zu violations of Osc(Pf) <= delta(P) Osc(f), worst gap %.3g", osc_viol,
         osc_worst);
  return sub_viol == 0 && osc_viol == 0;
}

bool asymptotic_orders() {
  std::vector<double> ns;
  for (int p = 12; p <= 24; p += 3) ns.push_back(std::ldexp(1.0, p));
  bool all = true;
  for (int id : {2, 3}) {
    std::vector<double> a, a2, dr, nr;
    for (double n : ns) {
      const auto m = static_cast<std::size_t>(n);
      const auto c = series_coefficients(build_example(id, m));
      a.push_back(c.alpha_n);
      a2.push_back(c.alpha2_n);
      dr.push_back(dobrushin_rate(m, c.alpha_n));
      nr.push_back(new_rate(m, c.alpha_n, c.alpha2_n));
    }
    struct Row {
      const char* what;
      double slope;
      double target;
    } rows[] = {{"alpha_n", loglog_slope(ns, a), -1.0 / 3.0},
                {"alpha2_n", loglog_slope(ns, a2), -1.0 / 6.0},
                {"dobrushin_rate", loglog_slope(ns, dr), 0.0},
                {"new_rate", loglog_slope(ns, nr), 1.0 / 3.0}};
    for (const auto& r : rows) {
      const bool ok = within(r.slope, r.target, 0.05);
      all = all && ok;
      detail("example %d: log-log slope of %-14s = %+.4f (want %+.4f +- 0.05)  %s", id, r.what, r.slope, r.target,
             verdict(ok));
    }
    detail("example %d: alpha2_n at 2^12 = %.4f, at 2^24 = %.4f", id, a2.front(), a2.back());
  }
  return all;
}

bool exact_engine_identities() {
  // Decomposition identity, relative 1e-8.
  double worst_identity = 0.0;
  std::size_t identity_fail = 0;
  Xoshiro256 rng(505);
  for (int t = 0; t < 200; ++t) {
    const Schedule s = random_schedule(rng, rng.uniform_int(2, 6), rng.uniform_int(2, 200), {t % 3 == 0 ? 0.5 : 0.0});
    const auto r = check_decomposition(s);
    worst_identity = std::max(worst_identity, r.details.count("relative_error") ? r.details.at("relative_error") : 1.0);
    if (!r.pass) ++identity_fail;
  }
  for (int id = 1; id <= 4; ++id) {
    for (std::size_t n : {4096u, 100000u}) {
      const auto r = check_decomposition(build_example(id, n));
      worst_identity = std::max(worst_identity, r.details.at("relative_error"));
      if (!r.pass) ++identity_fail;
    }
  }
  for (std::size_t n : {1000u, 100000u}) {
    const auto r = check_decomposition(build_bd(n, 1.0 / 3.0).schedule);
    worst_identity = std::max(worst_identity, r.details.at("relative_error"));
    if (!r.pass) ++identity_fail;
  }
  const bool ok_id = identity_fail == 0 && worst_identity <= 1e-8;
  detail("decomposition identity on 200 random + 10 built-in schedules: worst relative error %.3g (tol 1e-8)  %s",
         worst_identity, verdict(ok_id));

  // Path enumeration, |X| <= 3, n <= 8, 1e-10.
  std::size_t oracle_fail = 0, oracle_count = 0;
  double oracle_worst = 0.0;
  Xoshiro256 orng(606);
  while (oracle_count < 200) {
    const std::size_t k = orng.uniform_int(2, 3);
    const std::size_t n = orng.uniform_int(2, 8);
    const Schedule s = random_schedule(orng, k, n, {orng.uniform() < 0.3 ? 0.4 : 0.0, orng.uniform() < 0.5, true});
    if (exact_mean_var(s).variance < 1e-12) continue;
    const auto r = oracle::compare_with_paths(s);
    oracle_worst = std::max(oracle_worst, r.max_violation + oracle::kOracleTolerance);
    if (!r.pass) ++oracle_fail;
    ++oracle_count;
  }
  const bool ok_or = oracle_fail == 0;
  detail("path enumeration on %zu schedules (|X|<=3, n<=8): worst error %.3g (tol 1e-10), %zu failures  %s",
         oracle_count, oracle_worst, oracle_fail, verdict(ok_or));

  // Variance lower bound on 500 random schedules.
  std::size_t p3_fail = 0;
  double p3_slack = std::numeric_limits<double>::infinity();
  Xoshiro256 prng(707);
  for (int t = 0; t < 500; ++t) {
    const Schedule s = random_schedule(prng, prng.uniform_int(2, 6), prng.uniform_int(2, 100), {t % 4 == 0 ? 0.5 : 0.0});
    const auto r = check_prop3(s);
    p3_slack = std::min(p3_slack, r.slack);
    if (!r.pass) ++p3_fail;
  }
  const bool ok_p3 = p3_fail == 0;
  detail("D(S_n) >= (alpha_n/4) sum D(f_i) on 500 random schedules: %zu violations, min slack %.3g  %s", p3_fail,
         p3_slack, verdict(ok_p3));
  return ok_id && ok_or && ok_p3;
}

bool lemma_verification() {
  std::vector<std::pair<std::string, Schedule>> cases;
  for (int id = 1; id <= 4; ++id) cases.emplace_back("example " + std::to_string(id), build_example(id, 4096));
  cases.emplace_back("bd", build_bd(4096, 1.0 / 3.0).schedule);
  bool all = true;
  for (const auto& [name, s] : cases) {
    const auto l1 = check_lemma1(s, 4000, 99);
    const auto l2 = check_lemma2(s);
    all = all && l1.pass && l2.pass;
    std::string per_case;
    for (const char* c : kLemma1Cases) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " %s:%.0f", c, l1.details.at(std::string("count_") + c));
      per_case += buf;
    }
    detail("%-9s n=4096: lemma1 max violation %.3g [%s ]  %s", name.c_str(), l1.max_violation, per_case.c_str() + 1,
           verdict(l1.pass));
    detail("%-9s n=4096: lemma2 max|Z|=%.4g bound=%.4g ratio to 8C/alpha2=%.3f  %s", name.c_str(), l2.details.at("max_Z"),
           l2.details.at("bound"), l2.details.at("ratio_to_8C_over_alpha2"), verdict(l2.pass));
  }
  return all;
}

bool clt_positive() {
  const auto small = simulate(example2(1000), kReps, 7001);
  const auto large = simulate(example2(100000), kReps, 7001);
  const double ks3 = normality_report(small).ks, ks5 = normality_report(large).ks;
  const bool dec = ks5 < ks3, floor = ks5 < 0.02;
  detail("example 2 (indicator of state 4), reps=%zu, seed 7001: KS(n=1e3)=%.5f KS(n=1e5)=%.5f", kReps, ks3, ks5);
  detail("KS(1e5) < KS(1e3): %s;  KS(1e5) < 0.02: %s", verdict(dec), verdict(floor));
  return dec && floor;
}

bool clt_negative() {
  bool all = true;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    const auto b = simulate(build_bd(n, 1.0 / 3.0).schedule, kReps, 8001);
    const auto r = normality_report(b);
    const bool ok = r.ks >= 0.02;
    all = all && ok;
    detail("bd n=%-6zu reps=%zu: KS=%.5f (se %.5f) skew=%+.4f ex.kurt=%+.4f, want KS >= 0.02  %s", n, kReps, r.ks,
           r.ks_se, r.skewness, r.excess_kurtosis, verdict(ok));
  }
  for (std::size_t n : {1000u, 2000u}) {
    const Schedule bd = build_bd(n, 1.0 / 3.0).schedule;
    const Schedule ex = example2(n);
    const auto mb = exact_mean_var(bd), me = exact_mean_var(ex);
    const double kb = ks_distance_to_normal(sum_distribution(bd), mb.mean, mb.variance);
    const double ke = ks_distance_to_normal(sum_distribution(ex), me.mean, me.variance);
    const bool ok = kb >= 2.0 * ke;
    all = all && ok;
    detail("exact n=%zu: KS(bd)=%.5f KS(example 2)=%.5f ratio %.3f (want >= 2)  %s", n, kb, ke, kb / ke, verdict(ok));
  }
  return all;
}

bool bd_variance_exponents() {
  std::vector<double> alpha, nalpha, d1, d2;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    const auto bd = build_bd(n, 1.0 / 3.0);
    const std::size_t k1 = bd.params.breakpoints[1];
    const double v1 = exact_mean_var(bd.schedule, 1, k1).variance;
    const double v2 = exact_mean_var(bd.schedule, k1, n).variance;
    alpha.push_back(bd.params.alpha);
    nalpha.push_back(static_cast<double>(n) * bd.params.alpha);
    d1.push_back(v1);
    d2.push_back(v2);
    detail("n=%-6zu k_1=%-3zu D(S_{1,k1})=%.4f D(S_{k1,n})=%.4f", n, k1, v1, v2);
  }
  const double s1 = loglog_slope(alpha, d1), s2 = loglog_slope(nalpha, d2);
  const bool ok1 = within(s1, -2.0, 0.1), ok2 = within(s2, 1.0, 0.1);
  detail("slope of log D(S_{1,k1}) on log alpha_n   = %+.4f (want -2 +- 0.1)  %s", s1, verdict(ok1));
  detail("slope of log D(S_{k1,n}) on log n alpha_n = %+.4f (want +1 +- 0.1)  %s", s2, verdict(ok2));
  return ok1 && ok2;
}

bool reproducibility() {
  const Schedule s = example2(5000);
  const std::string a = io::batch_csv(simulate(s, 20000, 4242, {1}));
  const std::string b = io::batch_csv(simulate(s, 20000, 4242, {1}));
  const std::string c = io::batch_csv(simulate(s, 20000, 4242, {5}));
  const auto dir = std::filesystem::temp_directory_path() / "dobrushin_acceptance";
  io::write_file_atomic(dir / "a.csv", a);
  io::write_file_atomic(dir / "b.csv", b);
  const bool files = io::read_file(dir / "a.csv") == io::read_file(dir / "b.csv");
  std::filesystem::remove_all(dir);
  detail("rerun: %s; 1 vs 5 workers: %s; written files equal: %s (%zu bytes)", a == b ? "identical" : "DIFFERENT",
         a == c ? "identical" : "DIFFERENT", files ? "yes" : "no", a.size());
  return a == b && a == c && files;
}

}  // namespace

int main() {
  std::printf("workers: %u (DOBRUSHIN_WORKERS overrides; results do not depend on it)\n\n", default_workers());
  criterion(1, "coefficient correctness", coefficient_correctness);
  criterion(2, "definition equivalence", definition_equivalence);
  criterion(3, "submultiplicativity and contraction", submultiplicativity_contraction);
  criterion(4, "asymptotic orders", asymptotic_orders);
  criterion(5, "exact-engine identities", exact_engine_identities);
  criterion(6, "lemma verification", lemma_verification);
  criterion(7, "CLT positive case", clt_positive);
  criterion(8, "CLT negative case (Bernstein-Dobrushin)", clt_negative);
  criterion(9, "BD variance exponents", bd_variance_exponents);
  criterion(10, "reproducibility", reproducibility);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
