#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "pulse/errors.hpp"

namespace pulse {

// Signed Q3.29 fixed point: 32-bit two's complement raw word, value = raw * 2^-29.
// Bit 31 is the sign, bits 30..29 the remaining integer bits, bits 28..0 the
// fraction. This is the storage format of membrane potentials, weights, beta
// and theta throughout the datapath; all arithmetic below matches the hardware
// units bit for bit (wrap-around adder, truncating multiplier, 3-bit threshold
// comparator).
struct Fx32 {
  int32_t raw = 0;
  friend constexpr bool operator==(Fx32, Fx32) = default;
};

inline constexpr int kFxFracBits = 29;
inline constexpr int32_t kFxOneRaw = INT32_C(1) << kFxFracBits;  // 0x20000000

inline constexpr Fx32 fx_zero{0};
inline constexpr Fx32 fx_one{kFxOneRaw};
inline constexpr Fx32 fx_minus_one{-kFxOneRaw};

constexpr double to_double(Fx32 v) { return static_cast<double>(v.raw) * 0x1.0p-29; }

// Quantizes a real to Q3.29 with round-to-nearest-even. Values at the very top
// of the range (>= 4.0 - 2^-30) round to an unrepresentable raw and are
// rejected like any other out-of-range input.
inline Fx32 encode(double x) {
  if (!(x >= -4.0 && x < 4.0)) {
    throw FxRangeError("fx: value " + std::to_string(x) + " outside Q3.29 range [-4, 4)");
  }
  const double scaled = std::ldexp(x, kFxFracBits);  // exact: pure exponent shift
  const double rounded = std::nearbyint(scaled);     // default FP mode: ties to even
  if (rounded > 2147483647.0) {
    throw FxRangeError("fx: value " + std::to_string(x) + " rounds above Q3.29 maximum");
  }
  return Fx32{static_cast<int32_t>(rounded)};
}

// Plain hardware adder: 32-bit two's-complement wrap-around, no saturation.
constexpr Fx32 add(Fx32 a, Fx32 b) {
  return Fx32{static_cast<int32_t>(static_cast<uint32_t>(a.raw) + static_cast<uint32_t>(b.raw))};
}

constexpr bool add_wraps(Fx32 a, Fx32 b) {
  return static_cast<int64_t>(a.raw) + static_cast<int64_t>(b.raw) != add(a, b).raw;
}

// Wrap-diagnosed add for engine accumulators.
constexpr Fx32 add_counted(Fx32 a, Fx32 b, uint64_t& wrap_events) {
  Fx32 r = add(a, b);
  if (static_cast<int64_t>(a.raw) + static_cast<int64_t>(b.raw) != r.raw) ++wrap_events;
  return r;
}

// 64-bit product, arithmetic shift right by 29 (truncation toward -inf), low
// 32 bits kept. Used only for the beta decay term in the datapath.
constexpr Fx32 mul(Fx32 a, Fx32 b) {
  const int64_t wide = static_cast<int64_t>(a.raw) * static_cast<int64_t>(b.raw);
  return Fx32{static_cast<int32_t>(wide >> kFxFracBits)};
}

// The 3-bit threshold comparator: sign bit clear and (bit 30 | bit 29) set,
// i.e. u >= 1.0. Equivalent to signed raw >= 0x20000000.
constexpr bool spike_check(Fx32 u) {
  const uint32_t r = static_cast<uint32_t>(u.raw);
  if (r & UINT32_C(0x80000000)) return false;
  return (r & UINT32_C(0x60000000)) != 0;
}

// Post-spike soft reset: subtract theta (= 1.0) via the wrap-around adder.
constexpr Fx32 soft_reset(Fx32 u) { return add(u, fx_minus_one); }

}  // namespace pulse
