// Counter-based random streams: every (seed, trial, stage) triple maps to an
// independent generator, so results never depend on scheduling.
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace readout {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** seeded through SplitMix64. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::uint64_t key) {
    for (auto& word : s_) {
      key = mix64(key);
      word = key;
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
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

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

/// Stages of a trial that draw randomness. Each gets its own stream so that
/// changing one channel's parameters leaves every other channel's draws intact.
enum class Stage : std::uint64_t {
  Preparation = 1,
  Thermal,
  Scatter,
  Depump,
  RamanWindow,
  Detection,
  Background,
  Vacuum,
  Presence,
};

/// Generator for one stage of one trial.
constexpr Xoshiro256 stream_for(std::uint64_t seed, std::uint64_t domain, std::uint64_t trial,
                                Stage stage) {
  std::uint64_t key = mix64(seed);
  key = mix64(key ^ domain);
  key = mix64(key ^ trial);
  key = mix64(key ^ static_cast<std::uint64_t>(stage));
  return Xoshiro256(key);
}

}  // namespace readout
