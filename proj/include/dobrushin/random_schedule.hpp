#pragma once

// Random kernels, functions and schedules for property checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dobrushin/kernel.hpp"
#include "dobrushin/rng.hpp"
#include "dobrushin/schedule.hpp"

namespace dobrushin {

/// Random probability vector; with probability `sparsity` each entry is zeroed
/// (at least one entry always survives).
inline std::vector<double> random_probability(Xoshiro256& rng, std::size_t k, double sparsity = 0.0) {
  std::vector<double> w(k);
  double total = 0.0;
  for (auto& v : w) {
    v = rng.uniform() < sparsity ? 0.0 : -std::log1p(-rng.uniform());
    total += v;
  }
  if (total == 0.0) {
    w[rng.uniform_int(0, k - 1)] = 1.0;
    total = 1.0;
  }
  for (auto& v : w) v /= total;
  return w;
}

inline Kernel random_kernel(Xoshiro256& rng, std::size_t k, double sparsity = 0.0) {
  std::vector<double> p;
  p.reserve(k * k);
  for (std::size_t x = 0; x < k; ++x) {
    auto row = random_probability(rng, k, sparsity);
    p.insert(p.end(), row.begin(), row.end());
  }
  return Kernel(StateSpace(k), std::move(p));
}

/// Kernel whose entries are multiples of 2^-bits, so that sums of entries are
/// exact in double precision.
inline Kernel random_dyadic_kernel(Xoshiro256& rng, std::size_t k, unsigned bits = 16) {
  const std::uint64_t units = std::uint64_t{1} << bits;
  const double unit = std::ldexp(1.0, -static_cast<int>(bits));
  std::vector<double> p;
  p.reserve(k * k);
  for (std::size_t x = 0; x < k; ++x) {
    // k-1 sorted cut points in [0, units]
    std::vector<std::uint64_t> cuts{0, units};
    for (std::size_t c = 0; c + 1 < k; ++c) cuts.push_back(rng.uniform_int(0, units));
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t y = 0; y < k; ++y) p.push_back(static_cast<double>(cuts[y + 1] - cuts[y]) * unit);
  }
  return Kernel(StateSpace(k), std::move(p));
}

inline BoundedFunction random_function(Xoshiro256& rng, std::size_t k, double scale = 1.0) {
  std::vector<double> v(k);
  for (auto& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return BoundedFunction(std::move(v));
}

/// Integer-valued function with values in {0..top}; keeps sum_distribution usable.
inline BoundedFunction random_lattice_function(Xoshiro256& rng, std::size_t k, std::uint64_t top = 2) {
  std::vector<double> v(k);
  for (auto& x : v) x = static_cast<double>(rng.uniform_int(0, top));
  return BoundedFunction(std::move(v));
}

struct RandomScheduleOptions {
  double sparsity = 0.0;
  bool lattice = false;  // integer observables
  bool centered = true;
};

/// Fully inhomogeneous schedule: a fresh kernel and observable at every step.
inline Schedule random_schedule(Xoshiro256& rng, std::size_t states, std::size_t n,
                                const RandomScheduleOptions& opt = {}) {
  std::vector<Kernel> kernels;
  std::vector<StepRange> kr;
  for (std::size_t i = 1; i < n; ++i) {
    kernels.push_back(random_kernel(rng, states, opt.sparsity));
    kr.push_back({i, i, i - 1});
  }
  std::vector<BoundedFunction> fs;
  std::vector<StepRange> fr;
  for (std::size_t i = 1; i <= n; ++i) {
    fs.push_back(opt.lattice ? random_lattice_function(rng, states) : random_function(rng, states));
    fr.push_back({i, i, i - 1});
  }
  return Schedule(n, random_probability(rng, states), std::move(kernels), std::move(kr), std::move(fs), std::move(fr),
                  opt.centered);
}

}  // namespace dobrushin
