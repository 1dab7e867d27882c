#pragma once

// Brute-force reference computations. Deliberately naive and independent of
// the recursions in exact.hpp; exponential or quadratic cost, small inputs only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "dobrushin/error.hpp"
#include "dobrushin/exact.hpp"
#include "dobrushin/kernel.hpp"
#include "dobrushin/schedule.hpp"
#include "dobrushin/summation.hpp"

namespace dobrushin::oracle {

/// sup over state pairs and all 2^|X| subsets A of |pi(x1,A) - pi(x2,A)|.
inline double subset_delta(const Kernel& k) {
  const std::size_t n = k.size();
  if (n > 20) throw InputError("subset_delta: state space too large to enumerate");
  double best = 0.0;
  for (std::size_t x1 = 0; x1 < n; ++x1) {
    for (std::size_t x2 = x1 + 1; x2 < n; ++x2) {
      for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double p1 = 0.0, p2 = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
          if (mask & (std::size_t{1} << y)) {
            p1 += k(x1, y);
            p2 += k(x2, y);
          }
        }
        best = std::max(best, std::fabs(p1 - p2));
      }
    }
  }
  return best;
}

/// D(S_n) from Var + 2 sum_{i<j} Cov with the joint law nu_i(x) pi_{i,j}(x,y),
/// pi_{i,j} accumulated left to right. O(n^2 |X|^2).
inline double naive_variance(const Schedule& s) {
  const std::size_t n = s.length();
  const std::size_t k = s.states();
  std::vector<std::vector<double>> nu(n + 1, std::vector<double>(k));
  std::vector<std::vector<double>> f(n + 1, std::vector<double>(k));
  nu[1].assign(s.initial_law().begin(), s.initial_law().end());
  for (std::size_t i = 1; i <= n; ++i) {
    s.observable_into(i, f[i]);
    if (i < n) nu[i + 1] = apply_to_measure(nu[i], s.kernel_at(i));
  }
  std::vector<double> mean(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t x = 0; x < k; ++x) mean[i] += nu[i][x] * f[i][x];
  }
  CompensatedSum var;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t x = 0; x < k; ++x) var += nu[i][x] * f[i][x] * f[i][x];
    var += -mean[i] * mean[i];
    // joint[x][y] = P(X_i = x, X_j = y)
    std::vector<std::vector<double>> joint(k, std::vector<double>(k, 0.0));
    for (std::size_t x = 0; x < k; ++x) joint[x][x] = nu[i][x];
    for (std::size_t j = i + 1; j <= n; ++j) {
      const Kernel& K = s.kernel_at(j - 1);
      std::vector<std::vector<double>> nj(k, std::vector<double>(k, 0.0));
      for (std::size_t x = 0; x < k; ++x)
        for (std::size_t m = 0; m < k; ++m)
          for (std::size_t y = 0; y < k; ++y) nj[x][y] += joint[x][m] * K(m, y);
      joint.swap(nj);
      double e = 0.0;
      for (std::size_t x = 0; x < k; ++x)
        for (std::size_t y = 0; y < k; ++y) e += joint[x][y] * f[i][x] * f[j][y];
      var += 2.0 * (e - mean[i] * mean[j]);
    }
  }
  return var.value();
}

/// Every path of a small schedule with its probability.
struct PathTable {
  std::size_t n = 0;
  std::size_t states = 0;
  std::vector<std::vector<std::size_t>> paths;
  std::vector<double> prob;
  std::vector<std::vector<double>> f;  // f[i][x], i = 1..n (index 0 unused)
};

inline PathTable enumerate_paths(const Schedule& s, std::size_t max_paths = 1u << 20) {
  PathTable t;
  t.n = s.length();
  t.states = s.states();
  double count = std::pow(static_cast<double>(t.states), static_cast<double>(t.n));
  if (count > static_cast<double>(max_paths)) throw InputError("enumerate_paths: too many paths");
  t.f.assign(t.n + 1, std::vector<double>(t.states));
  for (std::size_t i = 1; i <= t.n; ++i) s.observable_into(i, t.f[i]);
  std::vector<std::size_t> path(t.n, 0);
  const auto total = static_cast<std::size_t>(count);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < t.n; ++i) {
      path[i] = c % t.states;
      c /= t.states;
    }
    double p = s.initial_law()[path[0]];
    for (std::size_t i = 1; i < t.n && p > 0.0; ++i) p *= s.kernel_at(i)(path[i - 1], path[i]);
    t.paths.push_back(path);
    t.prob.push_back(p);
  }
  return t;
}

inline double path_sum(const PathTable& t, std::size_t r, std::size_t from = 1) {
  double v = 0.0;
  for (std::size_t i = from; i <= t.n; ++i) v += t.f[i][t.paths[r][i - 1]];
  return v;
}

/// nu_i(x) by summing path probabilities.
inline std::vector<std::vector<double>> path_marginals(const PathTable& t) {
  std::vector<std::vector<double>> nu(t.n + 1, std::vector<double>(t.states, 0.0));
  for (std::size_t r = 0; r < t.paths.size(); ++r)
    for (std::size_t i = 1; i <= t.n; ++i) nu[i][t.paths[r][i - 1]] += t.prob[r];
  return nu;
}

struct PathMoments {
  double mean;
  double variance;
};

inline PathMoments path_moments(const PathTable& t) {
  CompensatedSum m;
  for (std::size_t r = 0; r < t.paths.size(); ++r) m += t.prob[r] * path_sum(t, r);
  CompensatedSum v;
  for (std::size_t r = 0; r < t.paths.size(); ++r) {
    const double d = path_sum(t, r) - m.value();
    v += t.prob[r] * d * d;
  }
  return {m.value(), v.value()};
}

/// E[g(path) | X_i = x] for every x; states with zero probability get 0.
template <class G>
std::vector<double> conditional_on(const PathTable& t, std::size_t i, G&& g) {
  std::vector<double> num(t.states, 0.0), den(t.states, 0.0);
  for (std::size_t r = 0; r < t.paths.size(); ++r) {
    const std::size_t x = t.paths[r][i - 1];
    num[x] += t.prob[r] * g(r);
    den[x] += t.prob[r];
  }
  for (std::size_t x = 0; x < t.states; ++x) num[x] = den[x] > 0.0 ? num[x] / den[x] : 0.0;
  return num;
}

/// Z_k(x) = E[sum_{i>=k} f_i(X_i) | X_k = x] by enumeration.
inline std::vector<std::vector<double>> path_Z(const PathTable& t) {
  std::vector<std::vector<double>> Z(t.n + 1);
  for (std::size_t k = 1; k <= t.n; ++k) Z[k] = conditional_on(t, k, [&](std::size_t r) { return path_sum(t, r, k); });
  return Z;
}

/// D(Z_k - E[Z_k | X_{k-1}]) for k = 2..n (index k), and D(Z_1) at index 1.
inline std::vector<double> path_increment_variances(const PathTable& t) {
  const auto Z = path_Z(t);
  std::vector<double> out(t.n + 1, 0.0);
  for (std::size_t k = 2; k <= t.n; ++k) {
    const auto cm = conditional_on(t, k - 1, [&](std::size_t r) { return Z[k][t.paths[r][k - 1]]; });
    CompensatedSum v;
    for (std::size_t r = 0; r < t.paths.size(); ++r) {
      const double d = Z[k][t.paths[r][k - 1]] - cm[t.paths[r][k - 2]];
      v += t.prob[r] * d * d;
    }
    out[k] = v.value();
  }
  CompensatedSum m, v;
  for (std::size_t r = 0; r < t.paths.size(); ++r) m += t.prob[r] * Z[1][t.paths[r][0]];
  for (std::size_t r = 0; r < t.paths.size(); ++r) {
    const double d = Z[1][t.paths[r][0]] - m.value();
    v += t.prob[r] * d * d;
  }
  out[1] = v.value();
  return out;
}

/// Law of S_n keyed by its value rounded to 1e-9.
inline std::map<long long, double> path_sum_law(const PathTable& t) {
  std::map<long long, double> law;
  for (std::size_t r = 0; r < t.paths.size(); ++r) law[std::llround(path_sum(t, r) * 1e9)] += t.prob[r];
  return law;
}

/// Osc_x of E[(sum_{j>l} xi_j)^2 | X_{l-1} = x] / D(S_n), unnormalized
/// increments xi_j = Z_j - E[Z_j | X_{j-1}], all by enumeration.
inline double path_lemma4(const PathTable& t, std::size_t l, double DSn) {
  const auto Z = path_Z(t);
  std::vector<std::vector<double>> cm(t.n + 1);
  for (std::size_t j = 2; j <= t.n; ++j)
    cm[j] = conditional_on(t, j - 1, [&](std::size_t r) { return Z[j][t.paths[r][j - 1]]; });
  const auto v = conditional_on(t, l - 1, [&](std::size_t r) {
    double m = 0.0;
    for (std::size_t j = l + 1; j <= t.n; ++j) m += Z[j][t.paths[r][j - 1]] - cm[j][t.paths[r][j - 2]];
    return m * m / DSn;
  });
  return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
}

inline constexpr double kOracleTolerance = 1e-10;

/// Every quantity the exact engine produces for s, against enumeration:
/// moments, Z_k, increment variances, the law of S_n (lattice observables
/// only) and the Lemma 4 functional. Differences are relative to max(1, |ref|).
inline CheckReport compare_with_paths(const Schedule& s, double tol = kOracleTolerance) {
  const PathTable t = enumerate_paths(s);
  const std::size_t n = t.n;
  CheckReport rep;
  rep.check = "oracle";
  rep.n = n;
  auto diff = [](double got, double want) { return std::fabs(got - want) / std::max(1.0, std::fabs(want)); };
  std::map<std::string, double> err;
  auto note = [&](const char* what, double e) {
    err[what] = std::max(err[what], e);
    detail::record(rep, e, tol);
  };

  const PathMoments pm = path_moments(t);
  const MeanVar mv = exact_mean_var(s);
  note("mean", diff(mv.mean, pm.mean));
  note("variance", diff(mv.variance, pm.variance));
  note("naive_variance", diff(naive_variance(s), pm.variance));

  if (s.centered()) {
    const auto nu = path_marginals(t);
    const auto Z = path_Z(t);
    const MartingaleDecomposition d = martingale_decomposition(s);
    for (std::size_t kk = 1; kk <= n; ++kk) {
      const auto zk = d.Z_at(kk);
      for (std::size_t x = 0; x < t.states; ++x) {
        if (nu[kk][x] > 0.0) note("Z", diff(zk[x], Z[kk][x]));
      }
    }
    const auto inc = path_increment_variances(t);
    for (std::size_t kk = 2; kk <= n; ++kk) note("increment_variance", diff(d.xi_var[kk - 1], inc[kk]));
    note("Z1_variance", diff(d.Z1_var, inc[1]));
    if (n >= 3 && pm.variance > 1e-12) {
      const Lemma4Decay l4 = lemma4_decay(s);
      // Enumeration only sees reachable states, so compare where all are.
      for (std::size_t l = 2; l <= n - 1; ++l) {
        if (std::find(nu[l - 1].begin(), nu[l - 1].end(), 0.0) != nu[l - 1].end()) {
          rep.details["lemma4_skipped"] += 1;
          continue;
        }
        note("lemma4", diff(l4.values[l - 2], path_lemma4(t, l, mv.variance)));
      }
    }
  }

  bool lattice = true;
  for (const auto& f : s.raw_observables())
    for (double v : f.values()) lattice = lattice && v == std::round(v);
  if (lattice) {
    const SumDistribution dist = sum_distribution(s);
    std::vector<double> mass(dist.masses.size(), 0.0);
    for (std::size_t r = 0; r < t.paths.size(); ++r) {
      const auto j = std::llround((path_sum(t, r) - dist.lattice_offset) / dist.lattice_step);
      if (j < 0 || static_cast<std::size_t>(j) >= mass.size()) {
        if (t.prob[r] > 0.0) note("sum_law", 1.0);
        continue;
      }
      mass[static_cast<std::size_t>(j)] += t.prob[r];
    }
    for (std::size_t j = 0; j < mass.size(); ++j) note("sum_law", std::fabs(mass[j] - dist.masses[j]));
  }

  detail::finish(rep);
  rep.pass = rep.max_violation <= 0.0;  // tol is already the threshold
  for (const auto& [what, e] : err) rep.details[std::string("error_") + what] = e;
  return rep;
}

}  // namespace dobrushin::oracle
