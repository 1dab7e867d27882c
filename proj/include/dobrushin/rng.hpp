#pragma once

// Reproducible random streams.
//
// Output sequence contract (any reimplementation must match it bit for bit):
//
//   splitmix64(x):  x += 0x9E3779B97F4A7C15;
//                   z = x;
//                   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//                   z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//                   return z ^ (z >> 31);          (x is the updated state)
//
//   stream(seed, r): key = seed ^ mix(r), where mix(r) is the first splitmix64
//                    output from state r. The xoshiro256** state is the first
//                    four splitmix64 outputs from state key.
//
//   next():          xoshiro256** (Blackman & Vigna, 2018).
//   uniform():       (next() >> 11) * 2^-53, in [0, 1).
//
// Replication r of a batch always uses stream(seed, r), so results do not
// depend on how replications are spread over workers.

#include <array>
#include <cstddef>
#include <cstdint>

namespace dobrushin {

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::uint64_t key) noexcept {
    SplitMix64 sm(key);
    for (auto& w : s_) w = sm.next();
  }

  /// Stream of replication `index` under a batch seed.
  static constexpr Xoshiro256 stream(std::uint64_t seed, std::uint64_t index) noexcept {
    return Xoshiro256(seed ^ SplitMix64(index).next());
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return next(); }

  constexpr std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] by rejection (unbiased).
  constexpr std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept {
    const std::uint64_t span = hi - lo;
    if (span == ~std::uint64_t{0}) return next();
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = max() - max() % range;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return lo + v % range;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace dobrushin
