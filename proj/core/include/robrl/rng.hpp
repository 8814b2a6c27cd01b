#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace robrl {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for trial `index` of an experiment rooted at `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return base ^ splitmix64(index);
}

/// Seeded random source. Every sampler owns one; never share across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; never returns 0.
  double uniform_open_closed() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Index i such that cdf[i-1] <= u < cdf[i]; `cdf` is non-decreasing and ends at 1.
std::size_t sample_from_cdf(std::span<const double> cdf, double u);

}  // namespace robrl
