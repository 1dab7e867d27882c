#pragma once

// Finite-state transition kernels, their products, and the Markov-Dobrushin
// ergodicity coefficient.
//
// States are indexed 0..size-1 internally; every user-facing text format
// (JSON, CSV, error messages) uses 1-based state numbers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dobrushin/error.hpp"
#include "dobrushin/summation.hpp"

namespace dobrushin {

/// Row sums of a user-supplied kernel must be within this of one.
inline constexpr double kRowSumTolerance = 1e-12;
/// Row sums of a kernel produced by compose() may drift by at most this much.
inline constexpr double kProductRowSumTolerance = 1e-9;

class StateSpace {
 public:
  explicit StateSpace(std::size_t size, std::vector<std::string> labels = {})
      : size_(size), labels_(std::move(labels)) {
    if (size_ == 0) throw InputError("state space must have at least one state");
    if (!labels_.empty() && labels_.size() != size_) {
      throw InputError("state space has " + std::to_string(size_) + " states but " +
                       std::to_string(labels_.size()) + " labels");
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Display name of state x (0-based); falls back to the 1-based number.
  [[nodiscard]] std::string label(std::size_t x) const {
    return labels_.empty() ? std::to_string(x + 1) : labels_[x];
  }

  // Labels are cosmetic; two spaces are the same when they have the same size.
  friend bool operator==(const StateSpace& a, const StateSpace& b) noexcept {
    return a.size_ == b.size_;
  }

 private:
  std::size_t size_;
  std::vector<std::string> labels_;
};

/// A row-stochastic matrix; row x is the law pi(x, .).
class Kernel {
 public:
  /// Validates entries in [0,1] and row sums within kRowSumTolerance.
  Kernel(StateSpace space, std::vector<double> row_major) : space_(std::move(space)), p_(std::move(row_major)) {
    validate(kRowSumTolerance, 0.0);
  }

  static Kernel from_rows(const std::vector<std::vector<double>>& rows, std::vector<std::string> labels = {}) {
    const std::size_t k = rows.size();
    std::vector<double> flat;
    flat.reserve(k * k);
    for (std::size_t x = 0; x < k; ++x) {
      if (rows[x].size() != k) {
        throw InputError("row " + std::to_string(x + 1) + " has " + std::to_string(rows[x].size()) +
                         " entries, expected " + std::to_string(k));
      }
      flat.insert(flat.end(), rows[x].begin(), rows[x].end());
    }
    return Kernel(StateSpace(k, std::move(labels)), std::move(flat));
  }

  static Kernel identity(std::size_t size) {
    std::vector<double> p(size * size, 0.0);
    for (std::size_t x = 0; x < size; ++x) p[x * size + x] = 1.0;
    return Kernel(StateSpace(size), std::move(p));
  }

  /// Every row equal to `row`: the next state is independent of the current one.
  static Kernel constant_rows(std::span<const double> row) {
    const std::size_t k = row.size();
    std::vector<double> p;
    p.reserve(k * k);
    for (std::size_t x = 0; x < k; ++x) p.insert(p.end(), row.begin(), row.end());
    return Kernel(StateSpace(k), std::move(p));
  }

  [[nodiscard]] std::size_t size() const noexcept { return space_.size(); }
  [[nodiscard]] const StateSpace& space() const noexcept { return space_; }
  [[nodiscard]] double operator()(std::size_t x, std::size_t y) const noexcept { return p_[x * size() + y]; }
  [[nodiscard]] std::span<const double> row(std::size_t x) const noexcept {
    return {p_.data() + x * size(), size()};
  }
  [[nodiscard]] std::span<const double> data() const noexcept { return p_; }
  [[nodiscard]] std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out;
    for (std::size_t x = 0; x < size(); ++x) out.emplace_back(row(x).begin(), row(x).end());
    return out;
  }

  friend bool operator==(const Kernel& a, const Kernel& b) noexcept {
    return a.space_ == b.space_ && a.p_ == b.p_;
  }

 private:
  struct ProductTag {};
  Kernel(ProductTag, StateSpace space, std::vector<double> row_major)
      : space_(std::move(space)), p_(std::move(row_major)) {
    validate(kProductRowSumTolerance, kProductRowSumTolerance);
  }
  friend Kernel compose(const Kernel& a, const Kernel& b);

  void validate(double row_tol, double entry_slack) const {
    const std::size_t k = size();
    if (p_.size() != k * k) {
      throw InputError("kernel on " + std::to_string(k) + " states needs " + std::to_string(k * k) +
                       " entries, got " + std::to_string(p_.size()));
    }
    for (std::size_t x = 0; x < k; ++x) {
      CompensatedSum s;
      for (std::size_t y = 0; y < k; ++y) {
        const double v = p_[x * k + y];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0 + entry_slack) {
          throw InputError("entry (" + std::to_string(x + 1) + "," + std::to_string(y + 1) + ") = " +
                           format_g(v) + " is not a probability");
        }
        s += v;
      }
      if (std::fabs(s.value() - 1.0) > row_tol) {
        std::string msg = "row " + std::to_string(x + 1) + " sums to " + format_g(s.value()) +
                          " (tolerance " + format_g(row_tol) + ")";
        if (entry_slack > 0.0) throw NumericalError(msg);
        throw InputError(msg);
      }
    }
  }

  StateSpace space_;
  std::vector<double> p_;
};

/// Real function on the state space, f(x) = values[x].
class BoundedFunction {
 public:
  BoundedFunction(StateSpace space, std::vector<double> values) : space_(std::move(space)), v_(std::move(values)) {
    if (v_.size() != space_.size()) {
      throw InputError("function has " + std::to_string(v_.size()) + " values on a " +
                       std::to_string(space_.size()) + "-state space");
    }
    for (double v : v_) {
      if (!std::isfinite(v)) throw InputError("function values must be finite");
    }
  }
  // Takes by const& so the size is read before any move.
  explicit BoundedFunction(const std::vector<double>& values) : BoundedFunction(StateSpace(values.size()), values) {}

  static BoundedFunction constant(std::size_t size, double c) { return BoundedFunction(std::vector<double>(size, c)); }
  /// 1{x = state}, state 0-based.
  static BoundedFunction indicator(std::size_t size, std::size_t state) {
    std::vector<double> v(size, 0.0);
    v.at(state) = 1.0;
    return BoundedFunction(std::move(v));
  }

  [[nodiscard]] std::size_t size() const noexcept { return v_.size(); }
  [[nodiscard]] const StateSpace& space() const noexcept { return space_; }
  [[nodiscard]] double operator()(std::size_t x) const noexcept { return v_[x]; }
  [[nodiscard]] std::span<const double> values() const noexcept { return v_; }
  [[nodiscard]] double sup_norm() const noexcept {
    double m = 0.0;
    for (double v : v_) m = std::max(m, std::fabs(v));
    return m;
  }

 private:
  StateSpace space_;
  std::vector<double> v_;
};

/// Markov-Dobrushin coefficients of one kernel. pairwise_alpha is row-major,
/// size x size, symmetric with unit diagonal.
struct CoefficientReport {
  std::size_t size = 0;
  double delta = 0.0;
  double alpha = 1.0;
  std::vector<double> pairwise_alpha;

  [[nodiscard]] double pair(std::size_t x1, std::size_t x2) const { return pairwise_alpha[x1 * size + x2]; }
};

namespace detail {

inline void require_same_space(const StateSpace& a, const StateSpace& b, const char* what) {
  if (!(a == b)) {
    throw InputError(std::string(what) + ": state spaces differ (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + " states)");
  }
}

}  // namespace detail

/// Matrix product a*b: one step with a, then one with b. Not renormalized;
/// row sums drifting beyond kProductRowSumTolerance raise NumericalError.
inline Kernel compose(const Kernel& a, const Kernel& b) {
  detail::require_same_space(a.space(), b.space(), "compose");
  const std::size_t k = a.size();
  std::vector<double> p(k * k, 0.0);
  for (std::size_t x = 0; x < k; ++x) {
    for (std::size_t m = 0; m < k; ++m) {
      const double w = a(x, m);
      if (w == 0.0) continue;
      for (std::size_t y = 0; y < k; ++y) p[x * k + y] += w * b(m, y);
    }
  }
  return Kernel(Kernel::ProductTag{}, a.space(), std::move(p));
}

/// Total-variation distance between rows x1 and x2 (half the L1 distance).
inline double row_tv_distance(const Kernel& k, std::size_t x1, std::size_t x2) {
  const auto r1 = k.row(x1);
  const auto r2 = k.row(x2);
  double s = 0.0;
  for (std::size_t y = 0; y < r1.size(); ++y) s += std::fabs(r1[y] - r2[y]);
  return 0.5 * s;
}

/// Overlap sum_y min(pi(x1,y), pi(x2,y)) = 1 - TV(x1, x2).
inline double row_overlap(const Kernel& k, std::size_t x1, std::size_t x2) {
  const auto r1 = k.row(x1);
  const auto r2 = k.row(x2);
  double s = 0.0;
  for (std::size_t y = 0; y < r1.size(); ++y) s += std::min(r1[y], r2[y]);
  return s;
}

/// delta = max pairwise TV distance, alpha = 1 - delta.
inline CoefficientReport md_delta(const Kernel& k) {
  const std::size_t n = k.size();
  CoefficientReport r;
  r.size = n;
  r.pairwise_alpha.assign(n * n, 1.0);
  double delta = 0.0;
  for (std::size_t x1 = 0; x1 < n; ++x1) {
    for (std::size_t x2 = x1 + 1; x2 < n; ++x2) {
      delta = std::max(delta, row_tv_distance(k, x1, x2));
      const double a = row_overlap(k, x1, x2);
      r.pairwise_alpha[x1 * n + x2] = a;
      r.pairwise_alpha[x2 * n + x1] = a;
    }
  }
  r.delta = std::min(delta, 1.0);
  r.alpha = 1.0 - r.delta;
  return r;
}

/// Product of a nonempty sequence, left to right.
inline Kernel compose_all(std::span<const Kernel> kernels) {
  if (kernels.empty()) throw InputError("compose_all: empty kernel sequence");
  Kernel acc = kernels.front();
  for (std::size_t i = 1; i < kernels.size(); ++i) acc = compose(acc, kernels[i]);
  return acc;
}

/// Coefficients of the product pi_1 ... pi_m (not the product of the coefficients).
inline CoefficientReport md_delta_multistep(std::span<const Kernel> kernels) {
  return md_delta(compose_all(kernels));
}

inline double osc(std::span<const double> values) noexcept {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

inline double osc(const BoundedFunction& f) noexcept { return osc(f.values()); }

/// (k f)(x) = sum_y pi(x,y) f(y), written into out (may not alias f).
inline void apply_to_function(const Kernel& k, std::span<const double> f, std::span<double> out) noexcept {
  const std::size_t n = k.size();
  for (std::size_t x = 0; x < n; ++x) {
    const auto r = k.row(x);
    double s = 0.0;
    for (std::size_t y = 0; y < n; ++y) s += r[y] * f[y];
    out[x] = s;
  }
}

inline BoundedFunction apply_to_function(const Kernel& k, const BoundedFunction& f) {
  detail::require_same_space(k.space(), f.space(), "apply_to_function");
  std::vector<double> out(k.size());
  apply_to_function(k, f.values(), out);
  return BoundedFunction(k.space(), std::move(out));
}

/// (mu k)(y) = sum_x mu(x) pi(x,y), written into out (may not alias mu).
inline void apply_to_measure(std::span<const double> mu, const Kernel& k, std::span<double> out) noexcept {
  const std::size_t n = k.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    const double w = mu[x];
    if (w == 0.0) continue;
    const auto r = k.row(x);
    for (std::size_t y = 0; y < n; ++y) out[y] += w * r[y];
  }
}

/// Throws InputError unless mu is a probability vector on `size` states.
inline void require_probability(std::span<const double> mu, std::size_t size, double tol = kRowSumTolerance) {
  if (mu.size() != size) {
    throw InputError("probability vector has " + std::to_string(mu.size()) + " entries, expected " +
                     std::to_string(size));
  }
  CompensatedSum s;
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (!std::isfinite(mu[x]) || mu[x] < 0.0) {
      throw InputError("probability vector entry " + std::to_string(x + 1) + " is negative or not finite");
    }
    s += mu[x];
  }
  if (std::fabs(s.value() - 1.0) > tol) {
    throw InputError("probability vector sums to " + format_g(s.value()));
  }
}

inline std::vector<double> apply_to_measure(std::span<const double> mu, const Kernel& k) {
  require_probability(mu, k.size());
  std::vector<double> out(k.size());
  apply_to_measure(mu, k, out);
  return out;
}

/// Two-state symmetric kernel [[1-p, p], [p, 1-p]].
inline Kernel two_state_flip(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("flip probability must lie in [0,1]");
  return Kernel(StateSpace(2), {1.0 - p, p, p, 1.0 - p});
}

}  // namespace dobrushin
