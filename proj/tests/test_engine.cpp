#include "pulse/engine.hpp"

#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "pulse/fixed_point.hpp"
#include "pulse/model.hpp"
#include "pulse/testgen.hpp"

#include "support/random_models.hpp"

namespace pulse {
namespace {

TEST(AffectedUpdates, InteriorSpikeCoversFullWindow) {
  const auto taps = affected_updates(5, 5, 3, Padding::same, 28, 28);
  ASSERT_EQ(taps.size(), 9u);
  for (const TapUpdate& t : taps) {
    EXPECT_GE(t.nr, 4);
    EXPECT_LE(t.nr, 6);
    EXPECT_GE(t.nc, 4);
    EXPECT_LE(t.nc, 6);
    // Scatter form of cross-correlation: neuron (nr, nc) reads tap (kr, kc)
    // exactly when nr + kr - pad == r.
    EXPECT_EQ(t.nr + t.kr - 1, 5);
    EXPECT_EQ(t.nc + t.kc - 1, 5);
  }
}

TEST(AffectedUpdates, CornerSpikeClipsToFour) {
  const auto taps = affected_updates(0, 0, 3, Padding::same, 28, 28);
  const std::vector<TapUpdate> expected{
      {1, 1, 0, 0}, {1, 0, 0, 1}, {0, 1, 1, 0}, {0, 0, 1, 1}};
  ASSERT_EQ(taps.size(), 4u);
  for (const TapUpdate& e : expected) {
    EXPECT_NE(std::find(taps.begin(), taps.end(), e), taps.end())
        << "missing ((" << e.kr << "," << e.kc << "),(" << e.nr << "," << e.nc << "))";
  }
}

TEST(AffectedUpdates, OneByOneKernelAndValidPadding) {
  const auto identity = affected_updates(0, 0, 1, Padding::same, 28, 28);
  ASSERT_EQ(identity.size(), 1u);
  EXPECT_EQ(identity[0], (TapUpdate{0, 0, 0, 0}));

  // 'valid': nr = r - kr with a (H-K+1)-sized plane; corner spike reaches one neuron.
  const auto corner = affected_updates(0, 0, 3, Padding::valid, 26, 26);
  ASSERT_EQ(corner.size(), 1u);
  EXPECT_EQ(corner[0], (TapUpdate{0, 0, 0, 0}));

  // Bottom-right input corner of a 28x28 plane reaches only out (25,25) w(2,2).
  const auto far = affected_updates(27, 27, 3, Padding::valid, 26, 26);
  ASSERT_EQ(far.size(), 1u);
  EXPECT_EQ(far[0], (TapUpdate{2, 2, 25, 25}));
}

ConvLayerDesc one_plane_desc(uint32_t hw_dim) {
  return ConvLayerDesc{3, 1, 1, Padding::same, hw_dim, hw_dim, hw_dim, hw_dim};
}

TEST(RunConvLayer, AllZeroInput) {
  const SpikeTensor in(2, 1, 5, 5);
  const std::vector<Fx32> w(9, encode(0.2));
  const std::vector<Fx32> bias(1, fx_zero);
  LayerCounters counters;
  const SpikeTensor out = run_conv_layer(in, one_plane_desc(5), w, bias, HwEntry{1, 1},
                                         LifParams{encode(0.15)}, counters);
  EXPECT_EQ(out.total_spike_count(), 0u);
  EXPECT_EQ(counters.accum_updates, 0u);
  EXPECT_EQ(counters.input_spikes, 0u);
  EXPECT_EQ(counters.activ_evals, 2u * 1u * 25u);  // T x C_out x H x W
}

TEST(RunConvLayer, SubThresholdMembranesHoldTheWeight) {
  SpikeTensor in(1, 1, 5, 5);
  in.set(0, 0, 2, 2, true);
  const std::vector<Fx32> w(9, encode(0.2));
  const std::vector<Fx32> bias(1, fx_zero);

  std::vector<Fx32> snapshot;
  MembraneProbe probe = [&](uint32_t t, uint32_t ofm, uint32_t begin,
                            std::span<const Fx32> m) {
    ASSERT_EQ(t, 0u);
    ASSERT_EQ(ofm, 0u);
    ASSERT_EQ(begin, 0u);
    snapshot.assign(m.begin(), m.end());
  };
  LayerCounters counters;
  const SpikeTensor out = run_conv_layer(in, one_plane_desc(5), w, bias, HwEntry{1, 1},
                                         LifParams{encode(0.15)}, counters, probe);

  EXPECT_EQ(out.total_spike_count(), 0u);  // 0.2 never reaches theta
  ASSERT_EQ(snapshot.size(), 25u);
  for (uint32_t y = 0; y < 5; ++y) {
    for (uint32_t x = 0; x < 5; ++x) {
      const Fx32 u = snapshot[y * 5 + x];
      if (y >= 1 && y <= 3 && x >= 1 && x <= 3) {
        EXPECT_EQ(u, encode(0.2)) << "at (" << y << "," << x << ")";
      } else {
        EXPECT_EQ(u, fx_zero);
      }
    }
  }
  EXPECT_EQ(counters.accum_updates, 9u);
  EXPECT_EQ(counters.input_spikes, 1u);
}

TEST(RunConvLayer, UnitWeightsFireOnceAndResetToZero) {
  SpikeTensor in(2, 1, 5, 5);
  in.set(0, 0, 2, 2, true);
  const std::vector<Fx32> w(9, fx_one);
  const std::vector<Fx32> bias(1, fx_zero);
  LayerCounters counters;
  const SpikeTensor out = run_conv_layer(in, one_plane_desc(5), w, bias, HwEntry{1, 1},
                                         LifParams{encode(0.15)}, counters);
  EXPECT_EQ(out.plane_spike_count(0, 0), 9u);  // the full 3x3 neighborhood fires
  EXPECT_EQ(out.plane_spike_count(1, 0), 0u);  // soft reset left u = 0; leak keeps it there
  for (uint32_t y = 1; y <= 3; ++y) {
    for (uint32_t x = 1; x <= 3; ++x) EXPECT_TRUE(out.get(0, 0, y, x));
  }
}

TEST(RunConvLayer, BiasAloneCanFire) {
  const SpikeTensor in(1, 1, 3, 3);  // no input spikes at all
  const std::vector<Fx32> w(9, fx_zero);
  const std::vector<Fx32> bias(1, fx_one);
  LayerCounters counters;
  const SpikeTensor out = run_conv_layer(in, one_plane_desc(3), w, bias, HwEntry{1, 1},
                                         LifParams{encode(0.15)}, counters);
  EXPECT_EQ(out.total_spike_count(), 9u);  // bias is added every timestep
}

TEST(RunConvLayer, CountersAreChunkInvariant) {
  const testing::RandomModel model = testing::make_random_model(404);
  const auto* conv = std::get_if<ConvSpec>(&model.spec.layers[0]);
  ASSERT_NE(conv, nullptr);
  const SpikeTensor in = rate_encode(model.image, model.spec.timesteps, 7);
  const std::vector<Dims> shapes = infer_shapes(model.spec);
  const ConvLayerDesc d{conv->kernel,  conv->in_channels, conv->out_channels, conv->padding,
                        model.spec.in_h, model.spec.in_w, shapes[0].h,       shapes[0].w};
  const LifParams lif{model.spec.beta};

  LayerCounters whole, chunked;
  const SpikeTensor a = run_conv_layer(in, d, model.weights.layers[0].w,
                                       model.weights.layers[0].bias, HwEntry{1, 1}, lif, whole);
  const SpikeTensor b = run_conv_layer(in, d, model.weights.layers[0].w,
                                       model.weights.layers[0].bias, HwEntry{1, 3}, lif, chunked);
  EXPECT_EQ(a, b);
  // Every tap lands in exactly one chunk, so the totals agree.
  EXPECT_EQ(whole.accum_updates, chunked.accum_updates);
  EXPECT_EQ(whole.activ_evals, chunked.activ_evals);
  EXPECT_EQ(whole.input_spikes, chunked.input_spikes);
  EXPECT_EQ(whole.plane_events, chunked.plane_events);

  // Counter consistency: updates = sum over events of |affected| x C_out.
  uint64_t expected_updates = 0;
  for (uint32_t t = 0; t < in.timesteps(); ++t) {
    for (uint32_t c = 0; c < in.channels(); ++c) {
      for (uint32_t e : penc_compress(in, t, c)) {
        const auto [r, col] = index_to_coords(e, d.in_w);
        expected_updates +=
            affected_updates(r, col, d.kernel, d.padding, d.out_h, d.out_w).size();
      }
    }
  }
  EXPECT_EQ(whole.accum_updates, expected_updates * conv->out_channels);
}

TEST(RunDenseLayer, SingleUnitWeightFires) {
  SpikeTensor in(1, 1, 1, 4);
  in.set(0, 0, uint64_t{2}, true);
  std::vector<Fx32> w(3 * 4, fx_zero);
  w[1 * 4 + 2] = fx_one;  // neuron 1 watches feature 2
  const std::vector<Fx32> bias(3, fx_zero);
  LayerCounters counters;
  const SpikeTensor out =
      run_dense_layer(in, 3, 4, w, bias, HwEntry{1, 1}, LifParams{encode(0.15)}, counters);
  EXPECT_FALSE(out.get(0, 0, uint64_t{0}));
  EXPECT_TRUE(out.get(0, 1, uint64_t{0}));
  EXPECT_FALSE(out.get(0, 2, uint64_t{0}));
  EXPECT_EQ(counters.accum_updates, 3u);  // one event hits all three neurons
}

TEST(RunDenseLayer, HalfPlusHalfReachesThreshold) {
  // Pins the >= spike rule: 0.5 + 0.5 = 1.0 fires.
  SpikeTensor in(1, 1, 1, 4);
  in.set(0, 0, uint64_t{0}, true);
  in.set(0, 0, uint64_t{3}, true);
  std::vector<Fx32> w(1 * 4, fx_zero);
  w[0] = encode(0.5);
  w[3] = encode(0.5);
  const std::vector<Fx32> bias(1, fx_zero);
  LayerCounters counters;
  const SpikeTensor out =
      run_dense_layer(in, 1, 4, w, bias, HwEntry{1, 1}, LifParams{encode(0.15)}, counters);
  EXPECT_TRUE(out.get(0, 0, uint64_t{0}));
}

TEST(RunDenseLayer, MultiChannelInputFlattensRowMajor) {
  SpikeTensor in(1, 2, 2, 2);      // 8 flat features: c*4 + y*2 + x
  in.set(0, 1, 1, 0, true);        // flat index 1*4 + 2 = 6
  std::vector<Fx32> w(1 * 8, fx_zero);
  w[6] = fx_one;
  const std::vector<Fx32> bias(1, fx_zero);
  LayerCounters counters;
  const SpikeTensor out =
      run_dense_layer(in, 1, 8, w, bias, HwEntry{1, 1}, LifParams{encode(0.15)}, counters);
  EXPECT_TRUE(out.get(0, 0, uint64_t{0}));
}

TEST(RunMaxpool, OrSemanticsAndFloorTruncation) {
  SpikeTensor in(1, 1, 3, 3);
  in.set(0, 0, 2, 2, true);  // outside the lone 2x2 window
  SpikeTensor out = run_maxpool(in, 2);
  EXPECT_EQ(out.height(), 1u);
  EXPECT_EQ(out.width(), 1u);
  EXPECT_FALSE(out.get(0, 0, 0, 0));

  in.set(0, 0, 1, 0, true);  // inside
  out = run_maxpool(in, 2);
  EXPECT_TRUE(out.get(0, 0, 0, 0));
}

TEST(RunMaxpool, OneSpikePerWindowGivesAllOnes) {
  SpikeTensor in(1, 2, 4, 4);
  for (uint32_t c = 0; c < 2; ++c) {
    for (uint32_t y = 0; y < 4; y += 2) {
      for (uint32_t x = 0; x < 4; x += 2) in.set(0, c, y + (c ? 1 : 0), x, true);
    }
  }
  const SpikeTensor out = run_maxpool(in, 2);
  EXPECT_EQ(out.total_spike_count(), 2u * 4u);
}

TEST(RunNetwork, ZeroImageDecodesToClassZeroWithFlag) {
  NetworkSpec spec = parse_topology("4x4-2C3-2", 1);
  spec.timesteps = 2;
  spec.beta = encode(0.15);
  Weights weights = random_weights(spec, 5);
  const HardwareConfig hw = HardwareConfig::uniform(spec.layers.size());
  const ImageTensor zero(1, 4, 4);
  const RunResult run = run_network(spec, weights, hw, zero, 99);
  EXPECT_EQ(run.predicted_class, 0u);
  EXPECT_TRUE(run.no_spike);
  EXPECT_EQ(run.input_spikes.total_spike_count(), 0u);
}

TEST(RunNetwork, DeterministicAcrossRepeats) {
  const testing::RandomModel model = testing::make_random_model(77);
  const HardwareConfig hw = testing::sweep_hw(model.spec, 1, 2);
  const RunResult a = run_network(model.spec, model.weights, hw, model.image, 3);
  const RunResult b = run_network(model.spec, model.weights, hw, model.image, 3);
  EXPECT_EQ(a.predicted_class, b.predicted_class);
  EXPECT_EQ(a.output_spike_counts, b.output_spike_counts);
  for (size_t i = 0; i < a.layer_outputs.size(); ++i) {
    EXPECT_EQ(a.layer_outputs[i], b.layer_outputs[i]);
    EXPECT_EQ(a.counters[i].accum_updates, b.counters[i].accum_updates);
  }
}

TEST(RunNetwork, HardwareSweepIsFunctionallyInvisible) {
  const testing::RandomModel model = testing::make_random_model(1312);
  const RunResult base =
      run_network(model.spec, model.weights,
                  HardwareConfig::uniform(model.spec.layers.size()), model.image, 11);
  for (uint32_t nc_sel : {1u, 2u, 3u}) {
    for (uint32_t chunk : {2u, 3u}) {
      const RunResult other = run_network(model.spec, model.weights,
                                          testing::sweep_hw(model.spec, nc_sel, chunk),
                                          model.image, 11);
      EXPECT_EQ(base.predicted_class, other.predicted_class);
      for (size_t i = 0; i < base.layer_outputs.size(); ++i) {
        EXPECT_EQ(base.layer_outputs[i], other.layer_outputs[i]) << "layer " << i;
      }
    }
  }
}

TEST(RunNetwork, RejectsMismatchedImage) {
  NetworkSpec spec = parse_topology("4x4-2C3-2", 1);
  spec.beta = encode(0.15);
  Weights weights = random_weights(spec, 5);
  const HardwareConfig hw = HardwareConfig::uniform(spec.layers.size());
  EXPECT_THROW(run_network(spec, weights, hw, ImageTensor(1, 5, 4), 0), ValidationError);
}

}  // namespace
}  // namespace pulse
