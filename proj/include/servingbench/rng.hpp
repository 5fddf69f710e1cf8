#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace servingbench {

// Identifier recorded in every report so runs can be reproduced by any
// implementation of the same generator and seeding scheme.
inline constexpr std::string_view kPrngId = "xoshiro256**+splitmix64";

// SplitMix64 step; used for seeding and for cheap keyed hashing.
std::uint64_t splitmix64(std::uint64_t& state);

// Mixes two words into one; stable across platforms.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// xoshiro256** 1.0 (Blackman & Vigna). State is expanded from a 64-bit seed
/// with SplitMix64, so a seed fully determines the stream.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed);
  // Raw state constructor; the state must not be all zero.
  static Xoshiro256 from_state(const std::array<std::uint64_t, 4>& state);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  // Standard normal via the Marsaglia polar method. Caches the spare value.
  double normal();

 private:
  Xoshiro256() = default;

  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace servingbench
