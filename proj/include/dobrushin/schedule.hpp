#pragma once

// One series of a triangular array: a chain X_1..X_n with step kernels
// pi_{i,i+1}, an initial law, and per-step observables f_i.
//
// Kernels and observables are stored once per regime and assigned to steps by
// contiguous ranges, so a series of length 2^24 with one kernel costs O(1)
// memory. Step indices i are 1-based throughout this header.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dobrushin/error.hpp"
#include "dobrushin/kernel.hpp"
#include "dobrushin/summation.hpp"

namespace dobrushin {

/// Steps first..last (1-based, inclusive) use regime `index`.
struct StepRange {
  std::size_t first = 1;
  std::size_t last = 0;
  std::size_t index = 0;

  [[nodiscard]] std::size_t length() const noexcept { return last >= first ? last - first + 1 : 0; }
  friend bool operator==(const StepRange&, const StepRange&) = default;
};

namespace detail {

inline void validate_ranges(const std::vector<StepRange>& ranges, std::size_t first, std::size_t last,
                            std::size_t regimes, const char* what) {
  std::size_t expect = first;
  for (const auto& r : ranges) {
    if (r.length() == 0) throw InputError(std::string(what) + ": empty step range");
    if (r.first != expect) {
      throw InputError(std::string(what) + ": step ranges must be contiguous, expected step " +
                       std::to_string(expect) + " but range starts at " + std::to_string(r.first));
    }
    if (r.index >= regimes) throw InputError(std::string(what) + ": range refers to a missing regime");
    expect = r.last + 1;
  }
  if (last >= first && expect != last + 1) {
    throw InputError(std::string(what) + ": step ranges cover up to " + std::to_string(expect - 1) +
                     ", expected " + std::to_string(last));
  }
  if (last < first && !ranges.empty()) throw InputError(std::string(what) + ": ranges given for no steps");
}

inline std::size_t find_range(const std::vector<StepRange>& ranges, std::size_t i) {
  auto it = std::upper_bound(ranges.begin(), ranges.end(), i,
                             [](std::size_t v, const StepRange& r) { return v < r.first; });
  if (it == ranges.begin() || i > std::prev(it)->last) {
    throw InputError("step " + std::to_string(i) + " is outside the schedule");
  }
  return static_cast<std::size_t>(std::distance(ranges.begin(), it) - 1);
}

}  // namespace detail

/// Regime lookup for steps visited in (mostly) monotone order; amortized O(1).
class RangeCursor {
 public:
  explicit RangeCursor(const std::vector<StepRange>& ranges) : ranges_(&ranges) {}

  std::size_t operator()(std::size_t i) {
    const auto& r = *ranges_;
    while (r[q_].last < i) ++q_;
    while (r[q_].first > i) --q_;
    return r[q_].index;
  }

 private:
  const std::vector<StepRange>* ranges_;
  std::size_t q_ = 0;
};

class Schedule {
 public:
  /// kernel_ranges must cover steps 1..n-1 and observable_ranges steps 1..n.
  /// When `centered` is set, f_i is replaced by f_i - E f_i(X_i) using exact
  /// marginals (computed lazily on first use).
  Schedule(std::size_t n, std::vector<double> initial_law, std::vector<Kernel> kernels,
           std::vector<StepRange> kernel_ranges, std::vector<BoundedFunction> observables,
           std::vector<StepRange> observable_ranges, bool centered)
      : n_(n),
        initial_(std::move(initial_law)),
        kernels_(std::move(kernels)),
        kernel_ranges_(std::move(kernel_ranges)),
        observables_(std::move(observables)),
        observable_ranges_(std::move(observable_ranges)),
        centered_(centered),
        shift_(std::make_shared<LazyShift>()) {
    if (n_ == 0) throw InputError("schedule length must be positive");
    if (observables_.empty()) throw InputError("schedule needs at least one observable");
    const std::size_t k = observables_.front().size();
    require_probability(initial_, k);
    for (const auto& kern : kernels_) detail::require_same_space(kern.space(), observables_.front().space(), "schedule");
    for (const auto& f : observables_) detail::require_same_space(f.space(), observables_.front().space(), "schedule");
    detail::validate_ranges(kernel_ranges_, 1, n_ - 1, kernels_.size(), "kernel ranges");
    detail::validate_ranges(observable_ranges_, 1, n_, observables_.size(), "observable ranges");
  }

  /// Single kernel and single observable for every step.
  static Schedule homogeneous(std::size_t n, std::vector<double> initial_law, Kernel kernel, BoundedFunction f,
                              bool centered) {
    std::vector<StepRange> kr;
    if (n > 1) kr.push_back({1, n - 1, 0});
    return Schedule(n, std::move(initial_law), {std::move(kernel)}, std::move(kr), {std::move(f)}, {{1, n, 0}},
                    centered);
  }

  [[nodiscard]] std::size_t length() const noexcept { return n_; }
  [[nodiscard]] std::size_t states() const noexcept { return observables_.front().size(); }
  [[nodiscard]] std::span<const double> initial_law() const noexcept { return initial_; }
  [[nodiscard]] bool centered() const noexcept { return centered_; }

  [[nodiscard]] const std::vector<Kernel>& kernels() const noexcept { return kernels_; }
  [[nodiscard]] const std::vector<StepRange>& kernel_ranges() const noexcept { return kernel_ranges_; }
  [[nodiscard]] const std::vector<BoundedFunction>& raw_observables() const noexcept { return observables_; }
  [[nodiscard]] const std::vector<StepRange>& observable_ranges() const noexcept { return observable_ranges_; }

  /// Regime of pi_{i,i+1}, 1 <= i <= n-1.
  [[nodiscard]] std::size_t kernel_regime(std::size_t i) const {
    return kernel_ranges_[detail::find_range(kernel_ranges_, i)].index;
  }
  [[nodiscard]] const Kernel& kernel_at(std::size_t i) const { return kernels_[kernel_regime(i)]; }

  [[nodiscard]] std::size_t observable_regime(std::size_t i) const {
    return observable_ranges_[detail::find_range(observable_ranges_, i)].index;
  }
  /// Uncentered f_i values.
  [[nodiscard]] std::span<const double> raw_observable(std::size_t i) const {
    return observables_[observable_regime(i)].values();
  }

  /// Amount subtracted from the raw f_i; zero for an uncentered schedule.
  [[nodiscard]] double centering_shift(std::size_t i) const { return centered_ ? shifts()[i - 1] : 0.0; }

  /// f_i as used by every computation (centered if requested).
  [[nodiscard]] BoundedFunction observable_at(std::size_t i) const {
    const auto raw = raw_observable(i);
    const double c = centering_shift(i);
    std::vector<double> v(raw.begin(), raw.end());
    for (double& x : v) x -= c;
    return BoundedFunction(observables_.front().space(), std::move(v));
  }

  /// Writes f_i into out (size = states()).
  void observable_into(std::size_t i, std::span<double> out) const {
    const auto raw = raw_observable(i);
    const double c = centering_shift(i);
    for (std::size_t x = 0; x < raw.size(); ++x) out[x] = raw[x] - c;
  }

  /// Per-step raw means E f_i(X_i) under exact marginals (length n). Shared
  /// across copies; computed once.
  [[nodiscard]] const std::vector<double>& raw_means() const { return shifts(); }

 private:
  struct LazyShift {
    std::once_flag once;
    std::vector<double> means;
  };

  const std::vector<double>& shifts() const {
    std::call_once(shift_->once, [this] { shift_->means = compute_raw_means(); });
    return shift_->means;
  }

  std::vector<double> compute_raw_means() const {
    const std::size_t k = states();
    std::vector<double> nu(initial_.begin(), initial_.end());
    std::vector<double> next(k);
    std::vector<double> means(n_);
    std::size_t kr = 0;
    std::size_t orr = 0;
    for (std::size_t i = 1; i <= n_; ++i) {
      while (observable_ranges_[orr].last < i) ++orr;
      const auto f = observables_[observable_ranges_[orr].index].values();
      CompensatedSum m;
      for (std::size_t x = 0; x < k; ++x) m += nu[x] * f[x];
      means[i - 1] = m.value();
      if (i == n_) break;
      while (kernel_ranges_[kr].last < i) ++kr;
      apply_to_measure(nu, kernels_[kernel_ranges_[kr].index], next);
      nu.swap(next);
    }
    return means;
  }

  std::size_t n_;
  std::vector<double> initial_;
  std::vector<Kernel> kernels_;
  std::vector<StepRange> kernel_ranges_;
  std::vector<BoundedFunction> observables_;
  std::vector<StepRange> observable_ranges_;
  bool centered_;
  std::shared_ptr<LazyShift> shift_;
};

/// A per-step series stored as runs of equal values. Indices are 1-based.
class StepSeries {
 public:
  struct Run {
    std::size_t first;
    std::size_t last;
    double value;

    [[nodiscard]] std::size_t length() const noexcept { return last - first + 1; }
  };

  void append(std::size_t first, std::size_t last, double value) {
    if (last < first) return;
    if (!runs_.empty() && runs_.back().value == value && runs_.back().last + 1 == first) {
      runs_.back().last = last;
    } else {
      runs_.push_back({first, last, value});
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return runs_.empty() ? 0 : runs_.back().last; }
  [[nodiscard]] bool empty() const noexcept { return runs_.empty(); }
  [[nodiscard]] const std::vector<Run>& runs() const noexcept { return runs_; }

  [[nodiscard]] double operator[](std::size_t i) const {
    auto it = std::upper_bound(runs_.begin(), runs_.end(), i, [](std::size_t v, const Run& r) { return v < r.first; });
    if (it == runs_.begin() || i > std::prev(it)->last) throw InputError("step " + std::to_string(i) + " out of range");
    return std::prev(it)->value;
  }

  [[nodiscard]] double min() const noexcept {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : runs_) m = std::min(m, r.value);
    return m;
  }

  [[nodiscard]] std::vector<double> to_vector() const {
    std::vector<double> v;
    v.reserve(size());
    for (const auto& r : runs_) v.insert(v.end(), r.length(), r.value);
    return v;
  }

 private:
  std::vector<Run> runs_;
};

struct SeriesCoefficients {
  double alpha_n = 1.0;
  double alpha2_n = 1.0;
  double delta_n = 0.0;
  StepSeries per_step_alpha;      // i = 1..n-1
  StepSeries per_two_step_alpha;  // i = 1..n-2
  std::size_t kernel_evaluations = 0;  // md_delta calls, one per distinct kernel or kernel pair
};

/// alpha_n = min_i alpha(pi_{i,i+1}), alpha_n^(2) = min_i alpha(pi_{i,i+1} pi_{i+1,i+2}).
/// Work is O(number of step ranges); coefficients are memoized per regime and
/// per adjacent regime pair. Empty minima (n < 2 or n < 3) are reported as 1.
inline SeriesCoefficients series_coefficients(const Schedule& s) {
  SeriesCoefficients out;
  const auto& kernels = s.kernels();
  const auto& ranges = s.kernel_ranges();

  std::vector<double> single(kernels.size(), -1.0);
  auto alpha_of = [&](std::size_t r) {
    if (single[r] < 0.0) {
      single[r] = md_delta(kernels[r]).alpha;
      ++out.kernel_evaluations;
    }
    return single[r];
  };
  std::map<std::pair<std::size_t, std::size_t>, double> pairs;
  auto alpha_of_pair = [&](std::size_t a, std::size_t b) {
    auto [it, fresh] = pairs.try_emplace({a, b}, 0.0);
    if (fresh) {
      it->second = md_delta(compose(kernels[a], kernels[b])).alpha;
      ++out.kernel_evaluations;
    }
    return it->second;
  };

  for (std::size_t q = 0; q < ranges.size(); ++q) {
    const auto& r = ranges[q];
    out.per_step_alpha.append(r.first, r.last, alpha_of(r.index));
    // Pairs (i, i+1) with both steps inside this range.
    if (r.length() >= 2) out.per_two_step_alpha.append(r.first, r.last - 1, alpha_of_pair(r.index, r.index));
    // Pair straddling into the next range.
    if (q + 1 < ranges.size()) {
      out.per_two_step_alpha.append(r.last, r.last, alpha_of_pair(r.index, ranges[q + 1].index));
    }
  }
  if (!out.per_step_alpha.empty()) out.alpha_n = out.per_step_alpha.min();
  if (!out.per_two_step_alpha.empty()) out.alpha2_n = out.per_two_step_alpha.min();
  out.delta_n = 1.0 - out.alpha_n;
  return out;
}

/// Finite-n quantities behind the CLT sufficient conditions. Reciprocals of a
/// zero coefficient are +infinity.
struct ConditionDiagnostics {
  double C_n = 0.0;
  double sum_var = 0.0;
  double dobrushin_lhs = 0.0;  // C_n^2 alpha_n^-3 / sum_var
  double dobrushin_rate = 0.0; // n^(1/3) alpha_n
  double new_lhs = 0.0;        // C_n^2 alpha_n^-1 (alpha_n^(2))^-2 / sum_var
  double new_rate = 0.0;       // n alpha_n (alpha_n^(2))^2
  bool degenerate = false;     // sum_var == 0
};

inline double dobrushin_rate(std::size_t n, double alpha_n) { return std::cbrt(static_cast<double>(n)) * alpha_n; }
inline double new_rate(std::size_t n, double alpha_n, double alpha2_n) {
  return static_cast<double>(n) * alpha_n * alpha2_n * alpha2_n;
}

/// sup_i sup_x |f_i(x)| for the (centered) observables.
inline double sup_norm_bound(const Schedule& s) {
  double c = 0.0;
  for (const auto& r : s.observable_ranges()) {
    const auto raw = s.raw_observables()[r.index].values();
    if (!s.centered()) {
      for (double v : raw) c = std::max(c, std::fabs(v));
      continue;
    }
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    for (std::size_t i = r.first; i <= r.last; ++i) {
      const double shift = s.centering_shift(i);
      c = std::max({c, std::fabs(*lo - shift), std::fabs(*hi - shift)});
    }
  }
  return c;
}

/// exact_vars[i-1] = D(f_i(X_i)), as produced by exact_mean_var().
inline ConditionDiagnostics condition_diagnostics(const Schedule& s, const SeriesCoefficients& coeffs,
                                                  std::span<const double> exact_vars) {
  if (exact_vars.size() != s.length()) {
    throw InputError("condition_diagnostics: need one variance per step (" + std::to_string(s.length()) + "), got " +
                     std::to_string(exact_vars.size()));
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  ConditionDiagnostics d;
  d.C_n = sup_norm_bound(s);
  CompensatedSum sv;
  for (double v : exact_vars) sv += v;
  d.sum_var = std::max(0.0, sv.value());
  d.degenerate = d.sum_var == 0.0;
  const double a = coeffs.alpha_n;
  const double a2 = coeffs.alpha2_n;
  const double c2 = d.C_n * d.C_n;
  d.dobrushin_rate = dobrushin_rate(s.length(), a);
  d.new_rate = new_rate(s.length(), a, a2);
  d.dobrushin_lhs = (a == 0.0 || d.degenerate) ? inf : c2 / (a * a * a) / d.sum_var;
  d.new_lhs = (a == 0.0 || a2 == 0.0 || d.degenerate) ? inf : c2 / a / (a2 * a2) / d.sum_var;
  return d;
}

inline ConditionDiagnostics condition_diagnostics(const Schedule& s, std::span<const double> exact_vars) {
  return condition_diagnostics(s, series_coefficients(s), exact_vars);
}

}  // namespace dobrushin
