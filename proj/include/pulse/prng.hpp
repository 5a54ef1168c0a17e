#pragma once

#include <cstdint>

namespace pulse {

// SplitMix64 is the one PRNG used anywhere in the project. Spike draws use the
// keyed counter form below so any (seed, t, c, index) bit can be computed
// independently, in any order, on any platform, with identical results.

inline constexpr uint64_t kSplitMixGamma = UINT64_C(0x9E3779B97F4A7C15);

constexpr uint64_t splitmix64_mix(uint64_t z) {
  z ^= z >> 30;
  z *= UINT64_C(0xBF58476D1CE4E5B9);
  z ^= z >> 27;
  z *= UINT64_C(0x94D049BB133111EB);
  z ^= z >> 31;
  return z;
}

// Counter-based draw keyed by (seed, a, b, c): a chain of SplitMix64 rounds,
// one per key component.
constexpr uint64_t keyed_draw(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  uint64_t z = splitmix64_mix(seed + kSplitMixGamma);
  z = splitmix64_mix(z + a + kSplitMixGamma);
  z = splitmix64_mix(z + b + kSplitMixGamma);
  z = splitmix64_mix(z + c + kSplitMixGamma);
  return z;
}

// Uniform in [0, 1): top 53 bits scaled by 2^-53, exact in double.
constexpr double unit_real(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Sequential SplitMix64 stream, for weight/image generation.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(uint64_t seed) : state_(seed) {}

  constexpr uint64_t next() {
    state_ += kSplitMixGamma;
    return splitmix64_mix(state_);
  }

  constexpr double next_unit() { return unit_real(next()); }

  // Uniform in [lo, hi).
  constexpr double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [0, n).
  constexpr uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next() % n; }

 private:
  uint64_t state_;
};

}  // namespace pulse
