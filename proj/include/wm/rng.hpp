#pragma once

/**
 * Deterministic utility RNG.
 *
 * SplitMix64: tiny state, full-period, passes BigCrush, and trivially
 * reproducible from a u64 seed. Used everywhere randomness is needed
 * outside the keyed PRF (corpus synthesis, LM sampling, attack edits,
 * Monte Carlo). Seeds for subtasks are derived, never shared, so
 * reordering one consumer cannot shift another's stream.
 */

#include <cstdint>
#include <string_view>

namespace wm::rng {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n >= 1. Multiply-shift; bias < 2^-64.
  std::uint64_t below(std::uint64_t n) {
    return std::uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

// Independent child seed for a named subtask. Mixing the tag through
// SplitMix64's own scrambler keeps child streams uncorrelated.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  SplitMix64 g(seed ^ (tag * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL));
  g.next_u64();
  return g.next_u64();
}

// Named variant: the tag is an FNV-1a hash of the label.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return derive_seed(seed, h);
}

}  // namespace wm::rng
