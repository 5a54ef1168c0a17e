#include "pulse/fixed_point.hpp"

#include <cstdint>
#include <limits>

#include <gtest/gtest.h>

#include "pulse/errors.hpp"
#include "pulse/prng.hpp"

namespace pulse {
namespace {

TEST(Encode, ExactAnchors) {
  EXPECT_EQ(encode(1.0).raw, 0x20000000);
  EXPECT_EQ(encode(0.0).raw, 0x00000000);
  EXPECT_EQ(encode(-1.0).raw, -0x20000000);
  EXPECT_EQ(encode(0.15).raw, 80530637);  // round(0.15 * 2^29)
  EXPECT_EQ(encode(-4.0).raw, std::numeric_limits<int32_t>::min());
  EXPECT_EQ(encode(0.5).raw, 0x10000000);
  EXPECT_EQ(encode(0.25).raw, 0x08000000);
}

TEST(Encode, RoundsToNearestEven) {
  // Halfway values: k + 0.5 ulps. 2^-30 = 0.5 ulp above zero -> rounds to 0 (even).
  EXPECT_EQ(encode(0x1.0p-30).raw, 0);
  // 3 * 2^-30 = 1.5 ulp -> rounds to 2 (even).
  EXPECT_EQ(encode(3 * 0x1.0p-30).raw, 2);
}

TEST(Encode, RangeChecks) {
  EXPECT_THROW(encode(4.0), FxRangeError);
  EXPECT_THROW(encode(-4.0000001), FxRangeError);
  EXPECT_THROW(encode(5.0), FxRangeError);
  // Just below 4.0 but rounding would hit 2^31: still out of range.
  EXPECT_THROW(encode(4.0 - 0x1.0p-31), FxRangeError);
  // Largest encodable value.
  EXPECT_EQ(encode(4.0 - 0x1.0p-29).raw, std::numeric_limits<int32_t>::max());
}

TEST(Encode, RoundTripErrorAndMonotone) {
  SplitMix64 rng(7);
  double prev_x = -4.0;
  int32_t prev_raw = encode(prev_x).raw;
  for (int i = 0; i < 20000; ++i) {
    const double x = rng.next_in(-4.0, 4.0 - 0x1.0p-28);
    const Fx32 v = encode(x);
    EXPECT_LE(std::abs(to_double(v) - x), 0x1.0p-30);
    if (x >= prev_x) {
      EXPECT_GE(v.raw, prev_raw);
    } else {
      EXPECT_LE(v.raw, prev_raw);
    }
    prev_x = x;
    prev_raw = v.raw;
  }
}

TEST(Add, BasicAndWrap) {
  EXPECT_EQ(add(fx_one, fx_minus_one), fx_zero);
  EXPECT_EQ(add(encode(0.5), encode(0.25)).raw, 0x18000000);  // 0.75

  // 3.999... + 0.5 wraps into negative territory like a plain 32-bit adder.
  const Fx32 near_max{std::numeric_limits<int32_t>::max()};
  const Fx32 half = encode(0.5);
  EXPECT_TRUE(add_wraps(near_max, half));
  EXPECT_LT(add(near_max, half).raw, 0);
  uint64_t wraps = 0;
  (void)add_counted(near_max, half, wraps);
  EXPECT_EQ(wraps, 1u);
  (void)add_counted(encode(1.0), encode(1.0), wraps);
  EXPECT_EQ(wraps, 1u);  // 2.0 is in range, no wrap
}

TEST(Add, RawModularCommutativeAssociative) {
  SplitMix64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    const Fx32 a{static_cast<int32_t>(rng.next())};
    const Fx32 b{static_cast<int32_t>(rng.next())};
    const Fx32 c{static_cast<int32_t>(rng.next())};
    EXPECT_EQ(add(a, b), add(b, a));
    EXPECT_EQ(add(add(a, b), c), add(a, add(b, c)));
  }
}

TEST(Mul, IdentityZeroAndTruncation) {
  SplitMix64 rng(13);
  for (int i = 0; i < 5000; ++i) {
    const Fx32 x{static_cast<int32_t>(rng.next())};
    EXPECT_EQ(mul(fx_one, x), x);
    EXPECT_EQ(mul(x, fx_zero), fx_zero);
  }
  EXPECT_EQ(mul(encode(0.5), encode(0.5)), encode(0.25));

  // 0.15 * 0.8: truncating shift, compare against exact rational 0.12.
  const Fx32 p = mul(encode(0.15), encode(0.8));
  const int64_t wide = static_cast<int64_t>(80530637) * encode(0.8).raw;
  EXPECT_EQ(p.raw, static_cast<int32_t>(wide >> 29));
  EXPECT_NEAR(to_double(p), 0.12, 0x1.0p-28);
}

TEST(Mul, TruncatesTowardMinusInfinity) {
  // (-1 raw) * 0.5: exact product -0.5 ulp, arithmetic shift floors to -1 raw.
  EXPECT_EQ(mul(Fx32{-1}, encode(0.5)).raw, -1);
  EXPECT_EQ(mul(Fx32{1}, encode(0.5)).raw, 0);
}

TEST(SpikeCheck, BoundaryRaws) {
  EXPECT_FALSE(spike_check(Fx32{0x1FFFFFFF}));  // 1.0 - 2^-29
  EXPECT_TRUE(spike_check(Fx32{0x20000000}));   // exactly 1.0
  EXPECT_TRUE(spike_check(Fx32{0x3FFFFFFF}));
  EXPECT_TRUE(spike_check(Fx32{0x40000000}));   // 2.0, bit 30
  EXPECT_FALSE(spike_check(Fx32{static_cast<int32_t>(0x80000000)}));  // negative
  EXPECT_FALSE(spike_check(Fx32{-1}));          // 0xFFFFFFFF
  EXPECT_FALSE(spike_check(fx_zero));
}

TEST(SpikeCheck, EqualsSignedThresholdForAllTopBitPatterns) {
  SplitMix64 rng(17);
  for (uint32_t top = 0; top < 8; ++top) {
    for (int i = 0; i < 1000; ++i) {
      const uint32_t raw = (top << 29) | (static_cast<uint32_t>(rng.next()) & 0x1FFFFFFF);
      const Fx32 u{static_cast<int32_t>(raw)};
      EXPECT_EQ(spike_check(u), u.raw >= 0x20000000) << "raw=" << raw;
    }
  }
}

TEST(SoftReset, SubtractsOne) {
  EXPECT_EQ(soft_reset(encode(1.0)), fx_zero);
  EXPECT_EQ(soft_reset(encode(1.5)), encode(0.5));
  // 2.0 resets to 1.0, still >= theta; re-firing is the engine's (non-)choice.
  EXPECT_EQ(soft_reset(encode(2.0)), encode(1.0));
  EXPECT_TRUE(spike_check(soft_reset(encode(2.0))));
}

}  // namespace
}  // namespace pulse
