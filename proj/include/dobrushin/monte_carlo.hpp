#pragma once

// Seeded trajectory sampling of a schedule and normality diagnostics for the
// normalized sum (S_n - E S_n) / sqrt(D S_n).
//
// Replication r draws X_1 from the initial law and then steps with
// inverse-CDF sampling on the kernel row (cumulative sums in ascending state
// order), consuming one uniform() per draw from Xoshiro256::stream(seed, r).
// Replications are spread over worker threads in contiguous blocks; each
// writes only its own slot, so output is independent of the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dobrushin/error.hpp"
#include "dobrushin/exact.hpp"
#include "dobrushin/rng.hpp"
#include "dobrushin/schedule.hpp"
#include "dobrushin/stats.hpp"

namespace dobrushin {

/// Worker threads: $DOBRUSHIN_WORKERS if set and positive, else the hardware
/// concurrency. Never affects results.
inline unsigned default_workers() {
  if (const char* env = std::getenv("DOBRUSHIN_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks = 0.0;
};

/// Summary statistics, computed sequentially in index order.
inline SampleSummary summarize(std::span<const double> x) {
  SampleSummary s;
  const double m = static_cast<double>(x.size());
  CompensatedSum s1;
  for (double v : x) s1 += v;
  s.mean = s1.value() / m;
  CompensatedSum c2, c3, c4;
  for (double v : x) {
    const double d = v - s.mean;
    c2 += d * d;
    c3 += d * d * d;
    c4 += d * d * d * d;
  }
  const double m2 = c2.value() / m;
  s.variance = x.size() > 1 ? c2.value() / (m - 1.0) : 0.0;
  s.skewness = m2 > 0.0 ? (c3.value() / m) / std::pow(m2, 1.5) : 0.0;
  s.excess_kurtosis = m2 > 0.0 ? (c4.value() / m) / (m2 * m2) - 3.0 : 0.0;
  s.ks = ks_statistic(x);
  return s;
}

enum class Normalization { exact, plug_in };

struct SampleBatch {
  std::size_t n = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  Normalization normalization = Normalization::exact;
  double center = 0.0;  // E S_n used for normalization
  double scale = 1.0;   // sqrt(D S_n) used for normalization
  std::vector<double> normalized_sums;
  SampleSummary summary;
};

struct SimulateOptions {
  unsigned workers = 0;  // 0 = default_workers()
  Normalization normalization = Normalization::exact;
};

namespace detail {

/// Flattened schedule for the sampling loop.
struct StepPlan {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> cum;             // per kernel regime, k*k cumulative rows
  std::vector<std::uint32_t> regime;   // regime of step i at [i-1], i = 1..n-1
  std::vector<double> f;               // f_i(x) at [(i-1)*k + x]
  std::vector<double> init_cum;

  explicit StepPlan(const Schedule& s) : n(s.length()), k(s.states()) {
    for (const auto& K : s.kernels()) {
      for (std::size_t x = 0; x < k; ++x) {
        double c = 0.0;
        for (std::size_t y = 0; y < k; ++y) {
          c += K(x, y);
          cum.push_back(c);
        }
      }
    }
    regime.resize(n > 0 ? n - 1 : 0);
    for (const auto& r : s.kernel_ranges())
      for (std::size_t i = r.first; i <= r.last; ++i) regime[i - 1] = static_cast<std::uint32_t>(r.index);
    f.resize(n * k);
    for (std::size_t i = 1; i <= n; ++i) s.observable_into(i, {f.data() + (i - 1) * k, k});
    double c = 0.0;
    for (double p : s.initial_law()) {
      c += p;
      init_cum.push_back(c);
    }
  }

  static std::size_t draw(const double* cum, std::size_t k, double u) noexcept {
    for (std::size_t y = 0; y + 1 < k; ++y) {
      if (u < cum[y]) return y;
    }
    return k - 1;
  }

  double path_sum(Xoshiro256& rng) const noexcept {
    std::size_t x = draw(init_cum.data(), k, rng.uniform());
    double s = f[x];
    const double* fi = f.data();
    for (std::size_t i = 1; i < n; ++i) {
      const double* row = cum.data() + (static_cast<std::size_t>(regime[i - 1]) * k + x) * k;
      x = draw(row, k, rng.uniform());
      fi += k;
      s += fi[x];
    }
    return s;
  }
};

}  // namespace detail

/// reps >= 100 replications of S_n, normalized. Throws DegenerateError when
/// D(S_n) = 0.
inline SampleBatch simulate(const Schedule& s, std::size_t reps, std::uint64_t seed, const SimulateOptions& opt = {}) {
  if (reps < 100) throw InputError("simulate needs reps >= 100");
  SampleBatch b;
  b.n = s.length();
  b.reps = reps;
  b.seed = seed;
  b.normalization = opt.normalization;
  if (opt.normalization == Normalization::exact) {
    const MeanVar mv = exact_mean_var(s);
    if (!(mv.variance > 0.0)) throw DegenerateError("simulate: D(S_n) = 0, nothing to normalize");
    b.center = mv.mean;
    b.scale = std::sqrt(mv.variance);
  }

  const detail::StepPlan plan(s);
  std::vector<double> sums(reps);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(opt.workers ? opt.workers : default_workers(), reps));
  auto run = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      Xoshiro256 rng = Xoshiro256::stream(seed, r);
      sums[r] = plan.path_sum(rng);
    }
  };
  if (workers <= 1) {
    run(0, reps);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (reps + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = std::min(reps, w * chunk);
      const std::size_t hi = std::min(reps, lo + chunk);
      pool.emplace_back(run, lo, hi);
    }
  }

  if (opt.normalization == Normalization::plug_in) {
    const SampleSummary raw = summarize(sums);
    if (!(raw.variance > 0.0)) throw DegenerateError("simulate: sample variance is zero");
    b.center = raw.mean;
    b.scale = std::sqrt(raw.variance);
  }
  b.normalized_sums.resize(reps);
  for (std::size_t r = 0; r < reps; ++r) b.normalized_sums[r] = (sums[r] - b.center) / b.scale;
  b.summary = summarize(b.normalized_sums);
  return b;
}

struct NormalityThresholds {
  double consistent = 0.02;    // KS below this: consistent with N(0,1)
  double inconsistent = 0.05;  // KS above this: inconsistent
};

struct NormalityReport {
  double ks = 0.0;
  double ks_se = 0.0;
  double skewness = 0.0;
  double skewness_se = 0.0;
  double excess_kurtosis = 0.0;
  double excess_kurtosis_se = 0.0;
  std::string verdict;
};

inline std::string normality_verdict(double ks, const NormalityThresholds& t = {}) {
  if (ks < t.consistent) return "consistent";
  if (ks > t.inconsistent) return "inconsistent";
  return "indeterminate";
}

namespace detail {

inline double jackknife_se(std::span<const double> replicates) {
  const double m = static_cast<double>(replicates.size());
  CompensatedSum s;
  for (double v : replicates) s += v;
  const double mean = s.value() / m;
  CompensatedSum ss;
  for (double v : replicates) ss += (v - mean) * (v - mean);
  return std::sqrt((m - 1.0) / m * ss.value());
}

}  // namespace detail

/// KS, skewness and excess kurtosis with leave-one-out jackknife standard
/// errors, all O(reps log reps).
inline NormalityReport normality_report(std::span<const double> samples, const NormalityThresholds& t = {}) {
  const std::size_t m = samples.size();
  if (m < 10'000) throw InputError("normality_report needs at least 10^4 samples");
  const SampleSummary sum = summarize(samples);
  NormalityReport r;
  r.ks = sum.ks;
  r.skewness = sum.skewness;
  r.excess_kurtosis = sum.excess_kurtosis;
  r.verdict = normality_verdict(r.ks, t);

  // Moments: power sums of d = x - mean, then drop one term at a time.
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double x : samples) {
    const double d = x - sum.mean;
    s1 += d;
    s2 += d * d;
    s3 += d * d * d;
    s4 += d * d * d * d;
  }
  const double mm = static_cast<double>(m - 1);
  std::vector<double> skew(m), kurt(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double d = samples[i] - sum.mean;
    const double mu = (s1 - d) / mm;
    const double r2 = (s2 - d * d) / mm;
    const double r3 = (s3 - d * d * d) / mm;
    const double r4 = (s4 - d * d * d * d) / mm;
    const double c2 = r2 - mu * mu;
    const double c3 = r3 - 3 * mu * r2 + 2 * mu * mu * mu;
    const double c4 = r4 - 4 * mu * r3 + 6 * mu * mu * r2 - 3 * mu * mu * mu * mu;
    skew[i] = c2 > 0 ? c3 / std::pow(c2, 1.5) : 0.0;
    kurt[i] = c2 > 0 ? c4 / (c2 * c2) - 3.0 : 0.0;
  }
  r.skewness_se = detail::jackknife_se(skew);
  r.excess_kurtosis_se = detail::jackknife_se(kurt);

  // KS without sample j of the sorted array: earlier points keep rank, later
  // points drop one, so prefix/suffix maxima give every replicate in O(m).
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  std::vector<double> pre(m), suf(m + 1, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double phi = normal_cdf(x[j]);
    const double a = std::max(std::fabs((j + 1) / mm - phi), std::fabs(j / mm - phi));
    pre[j] = std::max(j ? pre[j - 1] : 0.0, a);
  }
  for (std::size_t j = m; j-- > 0;) {
    const double phi = normal_cdf(x[j]);
    const double b = j ? std::max(std::fabs(j / mm - phi), std::fabs((j - 1.0) / mm - phi)) : 0.0;
    suf[j] = std::max(suf[j + 1], b);
  }
  std::vector<double> ks(m);
  for (std::size_t j = 0; j < m; ++j) ks[j] = std::max(j ? pre[j - 1] : 0.0, suf[j + 1]);
  r.ks_se = detail::jackknife_se(ks);
  return r;
}

inline NormalityReport normality_report(const SampleBatch& b, const NormalityThresholds& t = {}) {
  return normality_report(b.normalized_sums, t);
}

}  // namespace dobrushin
