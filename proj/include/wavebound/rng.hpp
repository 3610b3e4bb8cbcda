#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace wavebound {

/// xoshiro256** generator seeded through SplitMix64.
///
/// The integer stream is fixed by the algorithm and identical on every
/// platform. `uniform()` uses the top 53 bits, so it is exact as well.
/// `normal()` goes through std::log / std::cos and therefore inherits the
/// accuracy of the platform libm.
class Rng
{
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();
  /// Unbiased integer in [0, bound) (Lemire's method with rejection).
  std::uint64_t below(std::uint64_t bound);

  /// Independent child stream. Advances this generator by one draw.
  Rng split();

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_;
};

std::uint64_t splitmix64(std::uint64_t &state);

/// Fisher-Yates permutation of 0..n-1 driven by `rng`.
std::vector<std::size_t> permutation(std::size_t n, Rng &rng);

} // namespace wavebound
