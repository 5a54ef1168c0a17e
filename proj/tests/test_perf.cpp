#include <gtest/gtest.h>

#include <cstdint>
#include <string>
#include <vector>

#include "pulse/model.hpp"
#include "pulse/partition.hpp"
#include "pulse/perf.hpp"
#include "pulse/prng.hpp"

namespace pulse {
namespace {

constexpr uint32_t kPencWidth = 32;
constexpr uint32_t kFill = 4;

TEST(ConvCycles, SingleEventCostsKernelSquaredPerAssignedOfm) {
  // One event, K=3, 8 OFMs on 8 cores, one chunk: 9 accumulator cycles.
  const LayerCycles cy =
      estimate_conv_cycles(8, 3, 1, 28, 28, 28, 28, 1, 1, HwEntry{8, 1}, kPencWidth, kFill);
  EXPECT_EQ(cy.accum, 9u);
  EXPECT_EQ(cy.penc, 1u + 25u);       // 1 event + ceil(784/32) scan slices
  EXPECT_EQ(cy.activ, 784u);          // 1 timestep x 1 assigned OFM x 28x28
  EXPECT_EQ(cy.overhead, 4u);         // fill x 1 OFM x 1 chunk x 1 t x 1 c_in
  EXPECT_EQ(cy.total(), 26u + 784u + 4u);
}

TEST(ConvCycles, ZeroEventsLeaveOnlyScanAndActivation) {
  const LayerCycles cy =
      estimate_conv_cycles(4, 3, 2, 10, 10, 10, 10, 3, 0, HwEntry{2, 1}, kPencWidth, kFill);
  EXPECT_EQ(cy.accum, 0u);
  EXPECT_EQ(cy.penc, 3u * 2u * 4u);   // T x C_in x ceil(100/32)
  EXPECT_EQ(cy.activ, 3u * 2u * 100u);
}

TEST(ConvCycles, CoreCountDividesAccumulationExactly) {
  const uint64_t events = 12345;
  const LayerCycles one =
      estimate_conv_cycles(32, 3, 4, 28, 28, 28, 28, 3, events, HwEntry{1, 1}, kPencWidth, kFill);
  const LayerCycles all =
      estimate_conv_cycles(32, 3, 4, 28, 28, 28, 28, 3, events, HwEntry{32, 1}, kPencWidth, kFill);
  EXPECT_EQ(one.accum, 32u * all.accum);
  EXPECT_EQ(one.activ, 32u * all.activ);
}

TEST(ConvCycles, MonotoneInCoresAndChunks) {
  uint64_t prev_accum = UINT64_MAX;
  for (uint32_t nc = 1; nc <= 10; ++nc) {
    const LayerCycles cy =
        estimate_conv_cycles(10, 5, 3, 14, 14, 14, 14, 2, 777, HwEntry{nc, 1}, kPencWidth, kFill);
    EXPECT_LE(cy.accum, prev_accum);
    prev_accum = cy.accum;
  }
  uint64_t prev_chunk = 0;
  for (uint32_t chunk = 1; chunk <= 6; ++chunk) {
    const LayerCycles cy = estimate_conv_cycles(10, 5, 3, 14, 14, 14, 14, 2, 777,
                                                HwEntry{1, chunk}, kPencWidth, kFill);
    EXPECT_GE(cy.accum, prev_chunk);  // chunks replay the event stream
    prev_chunk = cy.accum;
  }
}

TEST(ConvCycles, AccumAtUnitHardwareEqualsWorkload) {
  SplitMix64 rng(31337);
  for (int i = 0; i < 50; ++i) {
    const uint32_t k = 1 + 2 * static_cast<uint32_t>(rng.next_below(3));  // 1,3,5
    const uint32_t c_out = 1 + static_cast<uint32_t>(rng.next_below(64));
    const uint64_t events = rng.next_below(100000);
    const LayerCycles cy = estimate_conv_cycles(c_out, k, 3, 28, 28, 28, 28, 4, events,
                                                HwEntry{1, 1}, kPencWidth, kFill);
    EXPECT_EQ(cy.accum, workload_conv(k, c_out, events));
  }
}

TEST(DenseCycles, UramPairsServeTwoNeuronsPerFetch) {
  const LayerCycles cy =
      estimate_dense_cycles(256, 1024, 1, 10, HwEntry{8, 1}, kPencWidth, kFill);
  EXPECT_EQ(cy.accum, 160u);  // ceil(256/16) = 16 rows per event x 10 events

  const LayerCycles tiny =
      estimate_dense_cycles(10, 810, 1, 1, HwEntry{10, 1}, kPencWidth, kFill);
  EXPECT_EQ(tiny.accum, 1u);  // ceil(10/20) = 1 row per event
}

TEST(DenseCycles, PhaseFormulas) {
  const LayerCycles cy = estimate_dense_cycles(500, 810, 3, 42, HwEntry{2, 1}, kPencWidth, kFill);
  EXPECT_EQ(cy.penc, 42u + 3u * 26u);  // events + T x ceil(810/32)
  EXPECT_EQ(cy.activ, 3u * 250u);       // T x ceil(500/2)
  EXPECT_EQ(cy.overhead, 4u * 3u);      // fill x T
  EXPECT_EQ(cy.total(), std::max(cy.penc, cy.accum) + cy.activ + cy.overhead);
}

TEST(CycleReport, PoolLayersCostNothingAndTotalsAdd) {
  NetworkSpec spec = parse_topology("8x8-4C3-P2-4", 1);
  spec.timesteps = 2;
  spec.beta = encode(0.15);
  resolve_shapes(spec);
  HardwareConfig hw = HardwareConfig::uniform(spec.layers.size(), 2, 1);

  std::vector<LayerCounters> counters(3);
  counters[0].input_spikes = 40;
  counters[1].input_spikes = 11;
  counters[2].input_spikes = 7;
  const CycleReport report = estimate_cycles(spec, hw, counters);

  ASSERT_EQ(report.layers.size(), 3u);
  EXPECT_EQ(report.layers[0].kind, "conv");
  EXPECT_EQ(report.layers[1].kind, "pool");
  EXPECT_EQ(report.layers[2].kind, "dense");
  EXPECT_EQ(report.layers[1].cycles, LayerCycles{});
  EXPECT_EQ(report.layers[0].cycles,
            estimate_conv_cycles(4, 3, 1, 8, 8, 8, 8, 2, 40, hw.layers[0], 32, 4));
  // Dense input is the flattened 4x4x4 pool output.
  EXPECT_EQ(report.layers[2].cycles,
            estimate_dense_cycles(4, 64, 2, 7, hw.layers[2], 32, 4));
  EXPECT_EQ(report.network_total, report.layers[0].cycles.total() +
                                      report.layers[2].cycles.total());
  EXPECT_EQ(report.clock_hz, 125000000u);
}

TEST(CycleReport, RejectsCounterRowMismatch) {
  NetworkSpec spec = parse_topology("8x8-4C3-4", 1);
  spec.timesteps = 1;
  spec.beta = encode(0.15);
  resolve_shapes(spec);
  HardwareConfig hw = HardwareConfig::uniform(spec.layers.size(), 1, 1);
  std::vector<LayerCounters> counters(1);
  EXPECT_THROW(estimate_cycles(spec, hw, counters), ValidationError);
}

TEST(CycleReport, FpsIsAnExactRatio) {
  CycleReport report;
  report.network_total = 125000;
  report.clock_hz = 125000000;
  EXPECT_EQ(report.fps(), 1000.0);
  EXPECT_EQ(report.fps() * static_cast<double>(report.network_total),
            static_cast<double>(report.clock_hz));
  report.network_total = 0;
  EXPECT_EQ(report.fps(), 0.0);
}

TEST(Resources, ConvMembraneShrinksWithChunksAndFilterBitsAreFixed) {
  const LayerResources r = conv_resources(32, 3, 1, 28, 28, HwEntry{8, 2});
  EXPECT_EQ(r.membrane_bits, 8u * 32u * 392u);  // N x 32 x ceil(784/2)
  EXPECT_EQ(r.weight_ff_bits, 32u * 9u * 1u * 32u);
  EXPECT_EQ(r.uram_rows, 0u);

  const LayerResources whole = conv_resources(32, 3, 1, 28, 28, HwEntry{8, 1});
  EXPECT_EQ(whole.membrane_bits, 8u * 32u * 784u);
}

TEST(Resources, DenseUramRowsPairNeurons) {
  const LayerResources r = dense_resources(500, 810, HwEntry{2, 1});
  EXPECT_EQ(r.membrane_bits, 2u * 32u);
  EXPECT_EQ(r.uram_rows, 250u * 810u);
  const LayerResources odd = dense_resources(9, 16, HwEntry{1, 1});
  EXPECT_EQ(odd.uram_rows, 5u * 16u);  // ceil(9/2) rows
}

TEST(Resources, ReportSumsLayersAndZeroesPools) {
  NetworkSpec spec = parse_topology("8x8-4C3-P2-4", 1);
  spec.timesteps = 1;
  spec.beta = encode(0.15);
  resolve_shapes(spec);
  HardwareConfig hw = HardwareConfig::uniform(spec.layers.size(), 2, 1);
  const ResourceReport report = estimate_resources(spec, hw);
  ASSERT_EQ(report.layers.size(), 3u);
  EXPECT_EQ(report.layers[1].res, LayerResources{});
  EXPECT_EQ(report.total.membrane_bits,
            report.layers[0].res.membrane_bits + report.layers[2].res.membrane_bits);
  EXPECT_EQ(report.total.uram_rows, report.layers[2].res.uram_rows);
}

TEST(ReportEmitters, JsonAndCsvAreStableAndComplete) {
  NetworkSpec spec = parse_topology("8x8-4C3-P2-4", 1);
  spec.timesteps = 2;
  spec.beta = encode(0.15);
  resolve_shapes(spec);
  HardwareConfig hw = HardwareConfig::uniform(spec.layers.size(), 1, 1);
  std::vector<LayerCounters> counters(3);
  counters[0].input_spikes = 5;
  const CycleReport report = estimate_cycles(spec, hw, counters);

  const nlohmann::json j = cycle_report_json(report);
  EXPECT_EQ(j["layers"].size(), 3u);
  EXPECT_EQ(j["network_total_cycles"].get<uint64_t>(), report.network_total);
  EXPECT_EQ(j["fps"]["numerator_hz"].get<uint64_t>(), report.clock_hz);
  EXPECT_EQ(j["fps"]["denominator_cycles"].get<uint64_t>(), report.network_total);
  EXPECT_EQ(j["layers"][0]["kind"], "conv");
  EXPECT_EQ(j["layers"][0]["total_cycles"].get<uint64_t>(), report.layers[0].cycles.total());
  EXPECT_EQ(j.dump(2), cycle_report_json(report).dump(2));

  const std::string csv = cycle_report_csv(report);
  EXPECT_NE(csv.find("layer_index,name,kind,input_spikes,penc_cycles"), std::string::npos);
  EXPECT_NE(csv.find("pool1,pool"), std::string::npos);

  const nlohmann::json rj = resource_report_json(estimate_resources(spec, hw));
  EXPECT_EQ(rj["layers"].size(), 3u);
  EXPECT_TRUE(rj["total"].contains("membrane_bits"));
  EXPECT_TRUE(rj["total"].contains("uram_rows"));
}

}  // namespace
}  // namespace pulse
