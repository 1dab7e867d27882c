// Coefficients and exact variance for a few schedules.
//   ./demo_coefficients

#include <cstdio>

#include "dobrushin.hpp"

using namespace dobrushin;

int main() {
  // One kernel: delta, alpha and the pairwise overlaps.
  const Kernel q = two_state_flip(0.3);
  const auto r = md_delta(q);
  std::printf("Q(0.3): delta=%.4f alpha=%.4f\n", r.delta, r.alpha);

  // Two-step coefficient can be positive when the one-step one is zero.
  for (int id = 1; id <= 4; ++id) {
    const std::size_t n = 1 << 16;
    const Schedule s = build_example(id, n);
    const auto c = series_coefficients(s);
    const auto mv = exact_mean_var(s);
    std::printf("example %d, n=%zu: alpha_n=%.5f alpha2_n=%.5f D(S_n)=%.2f\n", id, n, c.alpha_n, c.alpha2_n,
                mv.variance);
  }

  // Bernstein-Dobrushin blocking and the exact law of the sum.
  const auto bd = build_bd(1000, 1.0 / 3.0);
  const auto dist = sum_distribution(bd.schedule);
  const auto mv = exact_mean_var(bd.schedule);
  std::printf("bd n=1000: block=%zu blocks=%zu KS(exact law, normal)=%.4f\n", bd.params.block_len, bd.params.m_n,
              ks_distance_to_normal(dist, mv.mean, mv.variance));
}
