#pragma once

#include <cstdint>

namespace session::algo {

/// splitmix64. Chosen over the std engines because its output is pinned by
/// test vectors and is trivial to reproduce in any language.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on [-1, 1).
  double coordinate() noexcept { return 2.0 * uniform() - 1.0; }

  std::uint64_t state() const noexcept { return state_; }

private:
  std::uint64_t state_;
};

/// Seed for partition `k` of a run seeded with `base`: the (k+1)-th output
/// of SplitMix64(base). Partitions therefore get unrelated streams.
inline std::uint64_t partition_seed(std::uint64_t base, std::uint32_t k) noexcept {
  SplitMix64 g(base);
  std::uint64_t s = 0;
  for (std::uint32_t i = 0; i <= k; ++i) s = g.next();
  return s;
}

} // namespace session::algo
