#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace samo {

/// Deterministic xoshiro256** generator, seeded through splitmix64.
/// The same seed produces the same stream on every platform; none of the
/// derived draws (uniform, normal, below) go through implementation-defined
/// standard-library distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal();

  /// Unbiased integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> state_{};
};

/// Fisher-Yates permutation of 0..n-1 driven by rng.
std::vector<std::size_t> seeded_shuffle(std::size_t n, Rng& rng);

}  // namespace samo
