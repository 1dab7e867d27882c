#pragma once

// Schedule builders: the four sparse example families (one kernel per series)
// and the two-state Bernstein-Dobrushin blocking schedule.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dobrushin/error.hpp"
#include "dobrushin/kernel.hpp"
#include "dobrushin/schedule.hpp"

namespace dobrushin {

struct ExampleOptions {
  std::optional<double> beta;                 // default n^(-1/6)
  std::optional<double> eps;                  // default n^(-1/3)
  std::optional<BoundedFunction> observable;  // default 1{x = state 1}
  std::optional<std::vector<double>> initial; // default uniform
  bool centered = true;
};

inline double default_beta(std::size_t n) { return std::pow(static_cast<double>(n), -1.0 / 6.0); }
inline double default_eps(std::size_t n) { return std::pow(static_cast<double>(n), -1.0 / 3.0); }

/// The transition matrix of example family `id` (1..4).
inline Kernel example_kernel(int id, double beta, double eps) {
  switch (id) {
    case 1:
      if (!(beta > 0.0 && beta < 0.5)) throw InputError("example 1 needs 0 < beta < 1/2, got " + format_g(beta));
      return Kernel::from_rows({{1 - 2 * beta, beta, beta, 0},
                                {0, 0.5, 0.5, 0},
                                {0, 0, 0.5, 0.5},
                                {0, 0, 0, 1}});
    case 2:
      return Kernel::from_rows({{1 - 2 * beta, beta, beta, 0},
                                {0, 0.5, 0.5, 0},
                                {0, 0, 0.5, 0.5},
                                {0, eps, 0, 1 - eps}});
    case 3: {
      const double third = 1.0 / 3.0;
      return Kernel::from_rows({{1 - 2 * beta, beta, beta, 0, 0},
                                {0, third, third, 0, 1 - 2 * third},
                                {0, 0, 0.5, 0.5, 0},
                                {eps, 0, 0, 1 - beta, beta - eps},
                                {eps, 0, 0, beta - eps, 1 - beta}});
    }
    case 4:
      return Kernel::from_rows({{1 - beta, eps, eps, beta - 2 * eps},
                                {eps, 1 - beta, beta - 2 * eps, eps},
                                {0.25, 0.25, 0.25, 0.25},
                                {0.25, 0.25, 0.25, 0.25}});
    default:
      throw InputError("unknown example id " + std::to_string(id) + " (expected 1..4)");
  }
}

inline std::size_t example_states(int id) { return id == 3 ? 5 : 4; }

/// Series n of example family `id`: the same kernel at every step.
inline Schedule build_example(int id, std::size_t n, const ExampleOptions& opt = {}) {
  if (id < 1 || id > 4) throw InputError("unknown example id " + std::to_string(id) + " (expected 1..4)");
  if (n < 3) throw InputError("example schedules need n >= 3");
  const double beta = opt.beta.value_or(default_beta(n));
  const double eps = opt.eps.value_or(default_eps(n));
  Kernel k = example_kernel(id, beta, eps);
  const std::size_t states = k.size();
  std::vector<double> init = opt.initial.value_or(std::vector<double>(states, 1.0 / static_cast<double>(states)));
  BoundedFunction f = opt.observable.value_or(BoundedFunction::indicator(states, 0));
  return Schedule::homogeneous(n, std::move(init), std::move(k), std::move(f), opt.centered);
}

/// Blocking parameters of the Bernstein-Dobrushin schedule.
struct BDParams {
  std::size_t n = 0;
  double alpha = 0.0;            // prescribed rate n^(-exponent)
  std::size_t block_len = 0;     // floor(1/alpha)
  std::size_t m_n = 0;           // floor(n / block_len)
  std::vector<std::size_t> breakpoints;  // k_i = i * block_len, i = 0..m_n
};

struct BDSchedule {
  Schedule schedule;
  BDParams params;
};

/// floor(1/alpha) for alpha = n^(-e), snapping values within 1e-9 (relative)
/// of an integer so that e.g. 1000^(1/3) gives 10 rather than 9.
inline std::size_t bd_block_length(std::size_t n, double exponent) {
  const double x = std::pow(static_cast<double>(n), exponent);
  const double r = std::round(x);
  if (std::fabs(x - r) <= 1e-9 * std::max(1.0, x)) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::floor(x));
}

inline BDParams bd_params(std::size_t n, double exponent) {
  if (n < 10) throw InputError("Bernstein-Dobrushin schedule needs n >= 10");
  if (!(exponent > 0.0 && exponent <= 0.5)) throw InputError("alpha exponent must lie in (0, 1/2]");
  BDParams p;
  p.n = n;
  p.alpha = std::pow(static_cast<double>(n), -exponent);
  p.block_len = bd_block_length(n, exponent);
  if (p.block_len >= n) throw InputError("degenerate blocking: block length >= n");
  p.m_n = n / p.block_len;
  for (std::size_t i = 0; i <= p.m_n; ++i) p.breakpoints.push_back(i * p.block_len);
  return p;
}

/// Two-state schedule with flip kernels Q(p): Q(alpha) for i < k_1, Q(1/2) at
/// the breakpoints k_1..k_{m_n}, Q(1 - alpha) elsewhere. Observable 1{x = 1},
/// uniform start.
inline BDSchedule build_bd(std::size_t n, double exponent, bool centered = true) {
  BDParams p = bd_params(n, exponent);
  enum : std::size_t { kSticky = 0, kFair = 1, kFlip = 2 };
  std::vector<Kernel> kernels{two_state_flip(p.alpha), two_state_flip(0.5), two_state_flip(1.0 - p.alpha)};
  std::vector<StepRange> ranges;
  const std::size_t last_step = n - 1;
  auto push = [&](std::size_t a, std::size_t b, std::size_t regime) {
    b = std::min(b, last_step);
    if (a <= b) ranges.push_back({a, b, regime});
  };
  push(1, p.breakpoints[1] - 1, kSticky);
  for (std::size_t b = 1; b <= p.m_n; ++b) {
    const std::size_t k = p.breakpoints[b];
    if (k > last_step) break;
    push(k, k, kFair);
    const std::size_t next = b < p.m_n ? p.breakpoints[b + 1] - 1 : last_step;
    push(k + 1, next, kFlip);
  }
  Schedule s(n, {0.5, 0.5}, std::move(kernels), std::move(ranges), {BoundedFunction::indicator(2, 0)}, {{1, n, 0}},
             centered);
  return {std::move(s), std::move(p)};
}

}  // namespace dobrushin
