#pragma once

// Exact (sampling-free) computations on a schedule: marginals, mean and
// variance of S_n = sum_i f_i(X_i), the martingale decomposition
// S_n = sum_{k>=2} [Z_k - E(Z_k | X_{k-1})] + Z_1, the lattice law of S_n, and
// numerical checks of the oscillation / sup-norm / variance bounds that drive
// the two-step CLT.
//
// All recursions are O(n |X|^2) unless noted. Step indices are 1-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dobrushin/error.hpp"
#include "dobrushin/kernel.hpp"
#include "dobrushin/rng.hpp"
#include "dobrushin/schedule.hpp"
#include "dobrushin/stats.hpp"
#include "dobrushin/summation.hpp"

namespace dobrushin {

/// Laws nu_i of X_i, i = 1..n, stored row-major.
class MarginalTable {
 public:
  MarginalTable(std::size_t n, std::size_t states) : n_(n), k_(states), data_(n * states) {}

  [[nodiscard]] std::size_t length() const noexcept { return n_; }
  [[nodiscard]] std::size_t states() const noexcept { return k_; }
  [[nodiscard]] std::span<const double> at(std::size_t i) const noexcept { return {data_.data() + (i - 1) * k_, k_}; }
  [[nodiscard]] std::span<double> at(std::size_t i) noexcept { return {data_.data() + (i - 1) * k_, k_}; }

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> data_;
};

inline MarginalTable marginals(const Schedule& s) {
  const std::size_t n = s.length();
  MarginalTable t(n, s.states());
  const auto init = s.initial_law();
  std::copy(init.begin(), init.end(), t.at(1).begin());
  RangeCursor kc(s.kernel_ranges());
  for (std::size_t i = 1; i < n; ++i) apply_to_measure(t.at(i), s.kernels()[kc(i)], t.at(i + 1));
  return t;
}

namespace detail {

/// Mean and variance of f under nu, the variance as sum nu (f - m)^2.
struct Moments {
  double mean;
  double var;
};

inline Moments moments(std::span<const double> nu, std::span<const double> f) {
  CompensatedSum m;
  for (std::size_t x = 0; x < nu.size(); ++x) m += nu[x] * f[x];
  const double mean = m.value();
  CompensatedSum v;
  for (std::size_t x = 0; x < nu.size(); ++x) v += nu[x] * (f[x] - mean) * (f[x] - mean);
  return {mean, v.value()};
}

/// Cov under nu of two functions of the same state.
inline double covariance(std::span<const double> nu, std::span<const double> f, std::span<const double> g) {
  const double mf = moments(nu, f).mean;
  const double mg = moments(nu, g).mean;
  CompensatedSum c;
  for (std::size_t x = 0; x < nu.size(); ++x) c += nu[x] * (f[x] - mf) * (g[x] - mg);
  return c.value();
}

inline void require_centered(const Schedule& s, const char* what) {
  if (!s.centered()) throw InputError(std::string(what) + " requires a centered schedule");
}

}  // namespace detail

struct MeanVar {
  double mean = 0.0;                 // E S
  double variance = 0.0;             // D S
  std::size_t first = 1;             // per_step_var[0] is step `first`
  std::vector<double> per_step_var;  // D f_i(X_i)
};

/// Mean and variance of S_{first,last} = sum_{i=first}^{last} f_i(X_i).
/// Cross covariances use the backward recursion
///   h_i(x) = E[sum_{j>i} f_j(X_j) | X_i = x],  h_{i-1} = pi_{i-1,i}(f_i + h_i),
/// so that sum_{j>i} Cov(f_i, f_j) = Cov_{nu_i}(f_i, h_i).
inline MeanVar exact_mean_var(const Schedule& s, const MarginalTable& nu, std::size_t first, std::size_t last) {
  if (first < 1 || last > s.length() || first > last) throw InputError("exact_mean_var: bad step range");
  const std::size_t k = s.states();
  MeanVar out;
  out.first = first;
  out.per_step_var.assign(last - first + 1, 0.0);
  std::vector<double> h(k, 0.0), f(k), tmp(k);
  CompensatedSum mean, var;
  RangeCursor kc(s.kernel_ranges());
  for (std::size_t i = last;; --i) {
    s.observable_into(i, f);
    const auto m = detail::moments(nu.at(i), f);
    out.per_step_var[i - first] = m.var;
    mean += m.mean;
    var += m.var;
    if (i < last) var += 2.0 * detail::covariance(nu.at(i), f, h);
    if (i == first) break;
    for (std::size_t x = 0; x < k; ++x) tmp[x] = f[x] + h[x];
    apply_to_function(s.kernels()[kc(i - 1)], tmp, h);
  }
  out.mean = mean.value();
  out.variance = var.value();
  return out;
}

inline MeanVar exact_mean_var(const Schedule& s, std::size_t first, std::size_t last) {
  return exact_mean_var(s, marginals(s), first, last);
}

inline MeanVar exact_mean_var(const Schedule& s) { return exact_mean_var(s, 1, s.length()); }

struct MartingaleDecomposition {
  std::size_t n = 0;
  std::size_t states = 0;
  std::vector<double> Z;       // Z[(k-1)*states + x] = Z_k(x)
  std::vector<double> xi_var;  // xi_var[k-1] = D(Z_k - E[Z_k | X_{k-1}]) for k >= 2; xi_var[0] = 0
  double Z1_var = 0.0;
  double DSn = 0.0;            // covariance-formula variance
  double ESn = 0.0;
  double identity_error = 0.0; // |DSn - (sum xi_var + Z1_var)| / max(DSn, tiny)

  [[nodiscard]] std::span<const double> Z_at(std::size_t k) const { return {Z.data() + (k - 1) * states, states}; }
  [[nodiscard]] double increment_variance_sum() const {
    CompensatedSum s;
    for (double v : xi_var) s += v;
    s += Z1_var;
    return s.value();
  }
};

inline constexpr double kDecompositionTolerance = 1e-8;

/// Z_n = f_n, Z_k = f_k + pi_{k,k+1} Z_{k+1}; increments are normalized by
/// nothing here (callers divide by sqrt(D S_n) when they need the scaled
/// martingale). Throws NumericalError if the variance identity misses by more
/// than kDecompositionTolerance relative.
inline MartingaleDecomposition martingale_decomposition(const Schedule& s) {
  detail::require_centered(s, "martingale_decomposition");
  const std::size_t n = s.length();
  const std::size_t k = s.states();
  const MarginalTable nu = marginals(s);
  const MeanVar mv = exact_mean_var(s, nu, 1, n);

  MartingaleDecomposition d;
  d.n = n;
  d.states = k;
  d.Z.assign(n * k, 0.0);
  d.xi_var.assign(n, 0.0);
  d.DSn = mv.variance;
  d.ESn = mv.mean;

  std::vector<double> f(k), next(k), cond_mean(k);
  RangeCursor kc(s.kernel_ranges());
  s.observable_into(n, {d.Z.data() + (n - 1) * k, k});
  for (std::size_t kk = n; kk >= 2; --kk) {
    const Kernel& K = s.kernels()[kc(kk - 1)];
    const std::span<const double> zk{d.Z.data() + (kk - 1) * k, k};
    apply_to_function(K, zk, cond_mean);
    // D(xi_k) = sum_x nu_{k-1}(x) Var(Z_k | X_{k-1} = x)
    const auto prev = nu.at(kk - 1);
    CompensatedSum xv;
    for (std::size_t x = 0; x < k; ++x) {
      if (prev[x] == 0.0) continue;
      const auto row = K.row(x);
      CompensatedSum cv;
      for (std::size_t y = 0; y < k; ++y) cv += row[y] * (zk[y] - cond_mean[x]) * (zk[y] - cond_mean[x]);
      xv += prev[x] * cv.value();
    }
    d.xi_var[kk - 1] = xv.value();
    s.observable_into(kk - 1, f);
    for (std::size_t x = 0; x < k; ++x) d.Z[(kk - 2) * k + x] = f[x] + cond_mean[x];
  }
  d.Z1_var = detail::moments(nu.at(1), d.Z_at(1)).var;

  const double total = d.increment_variance_sum();
  const double scale = std::max(std::fabs(d.DSn), 1e-300);
  d.identity_error = d.DSn == 0.0 && total == 0.0 ? 0.0 : std::fabs(d.DSn - total) / scale;
  if (d.identity_error > kDecompositionTolerance && std::fabs(d.DSn - total) > 1e-14) {
    throw NumericalError("martingale variance identity off by " + format_g(d.identity_error) + " (relative)");
  }
  return d;
}

/// Exact law of S_n on the lattice offset + step * j, j = 0..masses.size()-1.
struct SumDistribution {
  double lattice_offset = 0.0;
  double lattice_step = 1.0;
  std::vector<double> masses;

  [[nodiscard]] double value(std::size_t j) const noexcept {
    return lattice_offset + lattice_step * static_cast<double>(j);
  }
  [[nodiscard]] double mean() const {
    CompensatedSum m;
    for (std::size_t j = 0; j < masses.size(); ++j) m += masses[j] * value(j);
    return m.value();
  }
  [[nodiscard]] double variance() const {
    const double mu = mean();
    CompensatedSum v;
    for (std::size_t j = 0; j < masses.size(); ++j) v += masses[j] * (value(j) - mu) * (value(j) - mu);
    return v.value();
  }
  [[nodiscard]] double total_mass() const {
    CompensatedSum t;
    for (double p : masses) t += p;
    return t.value();
  }
};

inline constexpr std::size_t kDefaultLatticeBudget = 10'000'000;
inline constexpr double kLatticeTolerance = 1e-9;

namespace detail {

inline double real_gcd(double a, double b, double tol) {
  if (a < b) std::swap(a, b);
  while (b > tol) {
    const double r = std::fmod(a, b);
    if (r <= tol || b - r <= tol) return b;
    a = b;
    b = r;
  }
  return a;
}

}  // namespace detail

/// Common lattice step of all observables (within-step value differences are
/// integer multiples of it, up to kLatticeTolerance). Throws InputError when
/// the observables are not lattice-compatible. Returns 1 when every f_i is
/// constant.
inline double lattice_step(const Schedule& s) {
  std::vector<double> diffs;
  for (const auto& f : s.raw_observables()) {
    const auto v = f.values();
    const double lo = *std::min_element(v.begin(), v.end());
    for (double x : v) {
      if (x - lo > kLatticeTolerance) diffs.push_back(x - lo);
    }
  }
  if (diffs.empty()) return 1.0;
  double g = diffs.front();
  for (double d : diffs) g = detail::real_gcd(g, d, kLatticeTolerance);
  for (double d : diffs) {
    const double q = d / g;
    if (std::fabs(q - std::round(q)) * g > kLatticeTolerance) {
      throw InputError("observables are not supported on a common lattice");
    }
  }
  return g;
}

/// Dynamic program over (state, accumulated lattice index). Cost
/// O(n |X|^2 support); refuses work when n * support exceeds max_lattice.
inline SumDistribution sum_distribution(const Schedule& s, std::size_t max_lattice = kDefaultLatticeBudget) {
  const std::size_t n = s.length();
  const std::size_t k = s.states();
  const double step = lattice_step(s);

  // Per observable regime: integer offsets above the regime minimum.
  std::vector<std::vector<std::size_t>> idx;
  std::vector<double> lows;
  std::vector<std::size_t> tops;
  for (const auto& f : s.raw_observables()) {
    const auto v = f.values();
    const double lo = *std::min_element(v.begin(), v.end());
    std::vector<std::size_t> j(k);
    std::size_t top = 0;
    for (std::size_t x = 0; x < k; ++x) {
      j[x] = static_cast<std::size_t>(std::llround((v[x] - lo) / step));
      top = std::max(top, j[x]);
    }
    idx.push_back(std::move(j));
    lows.push_back(lo);
    tops.push_back(top);
  }

  CompensatedSum offset;
  std::size_t support = 1;
  for (const auto& r : s.observable_ranges()) {
    support += tops[r.index] * r.length();
    for (std::size_t i = r.first; i <= r.last; ++i) offset += lows[r.index] - s.centering_shift(i);
  }
  if (support > max_lattice / n) {
    throw InputError("sum_distribution: n * lattice support = " + std::to_string(n) + " * " + std::to_string(support) +
                     " exceeds the budget of " + std::to_string(max_lattice));
  }

  // dp[x * support + j] = P(X_i = x, accumulated index = j)
  std::vector<double> dp(k * support, 0.0), next(k * support, 0.0);
  RangeCursor oc(s.observable_ranges());
  RangeCursor kc(s.kernel_ranges());
  {
    const auto& j1 = idx[oc(1)];
    const auto init = s.initial_law();
    for (std::size_t x = 0; x < k; ++x) dp[x * support + j1[x]] += init[x];
  }
  std::size_t hi = tops[oc(1)];  // highest reachable index so far
  for (std::size_t i = 1; i < n; ++i) {
    const Kernel& K = s.kernels()[kc(i)];
    const auto& jn = idx[oc(i + 1)];
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < k; ++x) {
      const double* src = dp.data() + x * support;
      for (std::size_t y = 0; y < k; ++y) {
        const double p = K(x, y);
        if (p == 0.0) continue;
        double* dst = next.data() + y * support + jn[y];
        for (std::size_t j = 0; j <= hi; ++j) dst[j] += p * src[j];
      }
    }
    hi += tops[oc(i + 1)];
    dp.swap(next);
  }

  SumDistribution out;
  out.lattice_step = step;
  out.lattice_offset = offset.value();
  out.masses.assign(support, 0.0);
  for (std::size_t x = 0; x < k; ++x) {
    for (std::size_t j = 0; j < support; ++j) out.masses[j] += dp[x * support + j];
  }
  return out;
}

/// sup_z |F(z) - Phi(z)| for the law of (S - mean) / sqrt(variance).
inline double ks_distance_to_normal(const SumDistribution& d, double mean, double variance) {
  if (!(variance > 0.0)) throw DegenerateError("ks_distance_to_normal: zero variance");
  const double sd = std::sqrt(variance);
  CompensatedSum cdf;
  double ks = 0.0;
  for (std::size_t j = 0; j < d.masses.size(); ++j) {
    if (d.masses[j] <= 0.0) continue;
    const double phi = normal_cdf((d.value(j) - mean) / sd);
    const double before = cdf.value();
    cdf += d.masses[j];
    ks = std::max({ks, std::fabs(before - phi), std::fabs(cdf.value() - phi)});
  }
  return ks;
}

/// Outcome of one numerical check. max_violation > 0 means some inequality
/// failed by that much; slack is the smallest margin (bound - lhs) observed.
struct CheckReport {
  std::string check;
  std::size_t n = 0;
  double max_violation = -std::numeric_limits<double>::infinity();
  double slack = std::numeric_limits<double>::infinity();
  bool pass = true;
  std::map<std::string, double> details;
};

inline constexpr double kCheckTolerance = 1e-10;

namespace detail {

inline void record(CheckReport& r, double lhs, double bound) {
  r.max_violation = std::max(r.max_violation, lhs - bound);
  r.slack = std::min(r.slack, bound - lhs);
}

inline void finish(CheckReport& r) {
  if (r.max_violation == -std::numeric_limits<double>::infinity()) r.max_violation = 0.0;
  r.pass = r.max_violation <= kCheckTolerance;
}

/// Bound factor for a gap of d steps: (1 - a2)^floor(d/2), times (1 - a) when d is odd.
inline double gap_factor(std::size_t d, double alpha, double alpha2) {
  double f = std::pow(1.0 - alpha2, static_cast<double>(d / 2));
  if (d % 2 == 1) f *= 1.0 - alpha;
  return f;
}

}  // namespace detail

/// Labels of the six oscillation/sup-norm inequalities checked by check_lemma1.
inline constexpr const char* kLemma1Cases[] = {"sup_norm", "osc_square", "case_a", "case_b", "case_c", "case_d"};

/// For random triples l < i <= j evaluates
///   ||pi_{i,j} f_j||            <= 2 C_n   g(j-i)
///   Osc(pi_{i,j} (f_j^2))        <= 2 C_n^2 g(j-i)
///   Osc(pi_{l,i}(f_i pi_{i,j} f_j)) <= 6 C_n^2 g(i-l) g(j-i)   (cases a-d by parity)
/// with g(d) = (1-alpha2_n)^floor(d/2) (1-alpha_n)^(d mod 2). Triples cycle
/// through the four parity combinations of (j-i, i-l); for n >= 8 the gaps
/// are log-uniform on [1, 64].
inline CheckReport check_lemma1(const Schedule& s, std::size_t trials, std::uint64_t seed = 1) {
  detail::require_centered(s, "check_lemma1");
  const std::size_t n = s.length();
  if (n < 2) throw InputError("check_lemma1 needs n >= 2");
  const std::size_t k = s.states();
  const SeriesCoefficients co = series_coefficients(s);
  const double C = sup_norm_bound(s);
  const double a = co.alpha_n;
  const double a2 = co.alpha2_n;

  CheckReport rep;
  rep.check = "lemma1";
  rep.n = n;
  std::map<std::string, double> worst;
  std::map<std::string, double> counts;
  for (const char* c : kLemma1Cases) {
    worst[c] = -std::numeric_limits<double>::infinity();
    counts[c] = 0;
  }
  auto note = [&](const char* label, double lhs, double bound) {
    detail::record(rep, lhs, bound);
    worst[label] = std::max(worst[label], lhs - bound);
    counts[label] += 1;
  };

  Xoshiro256 rng = Xoshiro256::stream(seed, 0);
  std::vector<double> g(k), w(k), h(k), tmp(k), fi(k);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t want_ji = (t / 2) % 2;  // parity of j - i
    const std::size_t want_il = t % 2;        // parity of i - l
    std::size_t l = 1, i = 2, j = 2;
    if (n >= 8) {
      // Gaps log-uniform on a window where the bounds are not vanishingly small.
      const std::size_t dmax = std::min<std::size_t>(64, (n - 1) / 2);
      auto gap = [&](std::size_t lo, std::size_t parity) {
        auto d = lo + static_cast<std::size_t>(std::exp(rng.uniform() * std::log(static_cast<double>(dmax - lo + 1)))) - 1;
        if (d % 2 != parity) d = d + 1 <= dmax ? d + 1 : d - 1;
        return d < lo ? lo + 1 : d;
      };
      const std::size_t dil = gap(1, want_il);
      const std::size_t dji = gap(0, want_ji);
      l = static_cast<std::size_t>(rng.uniform_int(1, n - dil - dji));
      i = l + dil;
      j = i + dji;
    } else {
      for (int attempt = 0; attempt < 256; ++attempt) {
        std::size_t u[3] = {static_cast<std::size_t>(rng.uniform_int(1, n)), static_cast<std::size_t>(rng.uniform_int(1, n)),
                            static_cast<std::size_t>(rng.uniform_int(1, n))};
        std::sort(u, u + 3);
        if (u[0] == u[1]) continue;
        l = u[0];
        i = u[1];
        j = u[2];
        if ((j - i) % 2 == want_ji && (i - l) % 2 == want_il) break;
      }
    }

    // g = pi_{i,j} f_j and w = pi_{i,j} (f_j^2), applied backwards from j.
    s.observable_into(j, g);
    for (std::size_t x = 0; x < k; ++x) w[x] = g[x] * g[x];
    for (std::size_t step = j; step > i; --step) {
      const Kernel& K = s.kernel_at(step - 1);
      apply_to_function(K, g, tmp);
      g.swap(tmp);
      apply_to_function(K, w, tmp);
      w.swap(tmp);
    }
    const double fij = detail::gap_factor(j - i, a, a2);
    double sup = 0.0;
    for (double v : g) sup = std::max(sup, std::fabs(v));
    note("sup_norm", sup, 2.0 * C * fij);
    note("osc_square", osc(w), 2.0 * C * C * fij);

    s.observable_into(i, fi);
    for (std::size_t x = 0; x < k; ++x) h[x] = fi[x] * g[x];
    for (std::size_t step = i; step > l; --step) {
      apply_to_function(s.kernel_at(step - 1), h, tmp);
      h.swap(tmp);
    }
    static constexpr const char* product_case[2][2] = {{"case_a", "case_b"}, {"case_c", "case_d"}};
    note(product_case[(j - i) % 2][(i - l) % 2], osc(h), 6.0 * C * C * detail::gap_factor(i - l, a, a2) * fij);
  }
  detail::finish(rep);
  for (const char* c : kLemma1Cases) {
    rep.details[std::string("count_") + c] = counts[c];
    rep.details[std::string("max_violation_") + c] = counts[c] > 0 ? worst[c] : 0.0;
  }
  rep.details["C_n"] = C;
  rep.details["alpha_n"] = a;
  rep.details["alpha2_n"] = a2;
  return rep;
}

/// Z_k for k = 1..n by the backward recursion, without marginals.
inline std::vector<double> backward_Z(const Schedule& s) {
  const std::size_t n = s.length();
  const std::size_t k = s.states();
  std::vector<double> Z(n * k), f(k), tmp(k);
  RangeCursor kc(s.kernel_ranges());
  s.observable_into(n, {Z.data() + (n - 1) * k, k});
  for (std::size_t kk = n - 1; kk >= 1; --kk) {
    apply_to_function(s.kernels()[kc(kk)], std::span<const double>(Z.data() + kk * k, k), tmp);
    s.observable_into(kk, f);
    for (std::size_t x = 0; x < k; ++x) Z[(kk - 1) * k + x] = f[x] + tmp[x];
  }
  return Z;
}

/// max_k ||Z_k|| <= 4 C_n / (1 - sqrt(1 - alpha2_n)); also reports the ratio to
/// the small-coefficient form 8 C_n / alpha2_n.
inline CheckReport check_lemma2(const Schedule& s) {
  detail::require_centered(s, "check_lemma2");
  const SeriesCoefficients co = series_coefficients(s);
  if (co.alpha2_n <= 0.0) throw DegenerateError("check_lemma2: alpha_n^(2) = 0");
  const double C = sup_norm_bound(s);
  const auto Z = backward_Z(s);
  double zmax = 0.0;
  for (double v : Z) zmax = std::max(zmax, std::fabs(v));
  // 1 - sqrt(1 - a) without cancellation
  const double denom = co.alpha2_n / (1.0 + std::sqrt(1.0 - co.alpha2_n));
  const double bound = 4.0 * C / denom;

  CheckReport rep;
  rep.check = "lemma2";
  rep.n = s.length();
  detail::record(rep, zmax, bound);
  detail::finish(rep);
  rep.details["max_Z"] = zmax;
  rep.details["bound"] = bound;
  rep.details["ratio_to_8C_over_alpha2"] = C > 0.0 ? zmax / (8.0 * C / co.alpha2_n) : 0.0;
  rep.details["alpha2_n"] = co.alpha2_n;
  rep.details["C_n"] = C;
  return rep;
}

/// D(S_n) >= (alpha_n / 4) sum_i D(f_i(X_i)).
inline CheckReport check_prop3(const Schedule& s) {
  detail::require_centered(s, "check_prop3");
  const SeriesCoefficients co = series_coefficients(s);
  const MeanVar mv = exact_mean_var(s);
  CompensatedSum sv;
  for (double v : mv.per_step_var) sv += v;
  const double rhs = co.alpha_n / 4.0 * sv.value();

  CheckReport rep;
  rep.check = "prop3";
  rep.n = s.length();
  detail::record(rep, rhs, mv.variance);
  detail::finish(rep);
  rep.details["DSn"] = mv.variance;
  rep.details["rhs"] = rhs;
  rep.details["alpha_n"] = co.alpha_n;
  rep.details["sum_var"] = sv.value();
  return rep;
}

/// Decomposition identity as a check (relative error against kDecompositionTolerance).
inline CheckReport check_decomposition(const Schedule& s) {
  CheckReport rep;
  rep.check = "decomposition";
  rep.n = s.length();
  MartingaleDecomposition d;
  try {
    d = martingale_decomposition(s);
  } catch (const NumericalError& e) {
    rep.pass = false;
    rep.max_violation = std::numeric_limits<double>::infinity();
    rep.slack = -std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.max_violation = d.identity_error - kDecompositionTolerance;
  rep.slack = kDecompositionTolerance - d.identity_error;
  rep.pass = d.identity_error <= kDecompositionTolerance || std::fabs(d.DSn - d.increment_variance_sum()) <= 1e-14;
  rep.details["DSn"] = d.DSn;
  rep.details["increment_sum"] = d.increment_variance_sum();
  rep.details["relative_error"] = d.identity_error;
  return rep;
}

/// Oscillation in x of
///   E[ sum_{j>l} v_j | X_{l-1} = x ]
///     = ( E[(sum_{j>l} f_j)^2 | X_{l-1}=x] - E[ E[Z_{l+1}|X_l]^2 | X_{l-1}=x ] ) / D(S_n)
/// for l = 2..n-1 (values[l-2]).
struct Lemma4Decay {
  std::size_t first_l = 2;
  std::vector<double> values;

  [[nodiscard]] double max() const noexcept {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

inline Lemma4Decay lemma4_decay(const Schedule& s) {
  detail::require_centered(s, "lemma4_decay");
  const std::size_t n = s.length();
  const std::size_t k = s.states();
  const double DSn = exact_mean_var(s).variance;
  if (!(DSn > 0.0)) throw DegenerateError("lemma4_decay: D(S_n) = 0");

  Lemma4Decay out;
  if (n < 3) return out;
  out.values.assign(n - 2, 0.0);

  // Z = Z_{l+1}, W = E[(sum_{j>=l+1} f_j)^2 | X_{l+1}], walking l downwards.
  std::vector<double> Z(k), W(k), f(k), u(k), B(k), B2(k), A(k), Bp(k), tmp(k);
  s.observable_into(n, Z);
  for (std::size_t x = 0; x < k; ++x) W[x] = Z[x] * Z[x];
  for (std::size_t l = n - 1; l >= 2; --l) {
    const Kernel& Kl = s.kernel_at(l);       // X_l -> X_{l+1}
    const Kernel& Kp = s.kernel_at(l - 1);   // X_{l-1} -> X_l
    apply_to_function(Kl, W, u);             // E[(sum_{j>l} f_j)^2 | X_l]
    apply_to_function(Kl, Z, B);             // E[Z_{l+1} | X_l]
    apply_to_function(Kp, u, A);
    for (std::size_t x = 0; x < k; ++x) B2[x] = B[x] * B[x];
    apply_to_function(Kp, B2, Bp);
    for (std::size_t x = 0; x < k; ++x) tmp[x] = (A[x] - Bp[x]) / DSn;
    out.values[l - 2] = osc(tmp);

    s.observable_into(l, f);
    for (std::size_t x = 0; x < k; ++x) {
      W[x] = f[x] * f[x] + 2.0 * f[x] * B[x] + u[x];
      Z[x] = f[x] + B[x];
    }
  }
  return out;
}

}  // namespace dobrushin
