#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulse/engine.hpp"
#include "pulse/model.hpp"

namespace pulse {

inline constexpr uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

// Cycle phases of one layer. PENC scanning and membrane accumulation overlap
// (the slower one bounds the pass); activation and pipeline fill are serial.
struct LayerCycles {
  uint64_t penc = 0;
  uint64_t accum = 0;
  uint64_t activ = 0;
  uint64_t overhead = 0;
  uint64_t total() const { return std::max(penc, accum) + activ + overhead; }
  friend bool operator==(const LayerCycles&, const LayerCycles&) = default;
};

// sum_events = spike events summed over every input plane and timestep. Each
// of a core's ceil(C_out/N) output channels replays the full event stream
// once per spatial chunk, spending K^2 accumulator cycles per event. The PENC
// pass pays one cycle per emitted event plus the scan of each input plane in
// penc_width-bit slices. Activation sweeps every assigned output neuron each
// timestep; the pipeline refills once per (assigned OFM, chunk, timestep,
// input channel) iteration.
inline LayerCycles estimate_conv_cycles(uint32_t c_out, uint32_t kernel, uint32_t c_in,
                                        uint32_t in_h, uint32_t in_w, uint32_t out_h,
                                        uint32_t out_w, uint32_t timesteps, uint64_t sum_events,
                                        HwEntry hw, uint32_t penc_width, uint32_t pipeline_fill) {
  LayerCycles cy;
  const uint64_t ofms_per_core = ceil_div(c_out, hw.nc_count);
  cy.accum = ofms_per_core * hw.chunk_count * kernel * kernel * sum_events;
  cy.penc = sum_events + static_cast<uint64_t>(timesteps) * c_in *
                             ceil_div(static_cast<uint64_t>(in_h) * in_w, penc_width);
  cy.activ = static_cast<uint64_t>(timesteps) * ofms_per_core * out_h * out_w;
  cy.overhead = static_cast<uint64_t>(pipeline_fill) * ofms_per_core * hw.chunk_count *
                timesteps * c_in;
  return cy;
}

// Dense weights sit in URAM two to a row, so one fetch feeds a neuron pair:
// an event costs ceil(out/(2N)) cycles per core. The flattened input train is
// one plane per timestep.
inline LayerCycles estimate_dense_cycles(uint32_t out_features, uint32_t in_features,
                                         uint32_t timesteps, uint64_t sum_events, HwEntry hw,
                                         uint32_t penc_width, uint32_t pipeline_fill) {
  LayerCycles cy;
  cy.accum = ceil_div(out_features, 2ull * hw.nc_count) * sum_events;
  cy.penc = sum_events + static_cast<uint64_t>(timesteps) * ceil_div(in_features, penc_width);
  cy.activ = static_cast<uint64_t>(timesteps) * ceil_div(out_features, hw.nc_count);
  cy.overhead = static_cast<uint64_t>(pipeline_fill) * timesteps;
  return cy;
}

struct LayerPerf {
  uint32_t layer_index = 0;
  std::string name;
  std::string kind;  // conv | pool | dense
  uint64_t input_spikes = 0;
  LayerCycles cycles;
};

struct CycleReport {
  std::vector<LayerPerf> layers;
  uint64_t network_total = 0;
  uint64_t clock_hz = 0;
  double fps() const {
    return network_total == 0 ? 0.0 : static_cast<double>(clock_hz) / network_total;
  }
};

// Event counts come from an actual run (LayerCounters per layer); shapes and
// knobs come from the model. Pool layers are fixed-function and cost nothing.
inline CycleReport estimate_cycles(const NetworkSpec& spec, const HardwareConfig& hw,
                                   const std::vector<LayerCounters>& counters) {
  if (counters.size() != spec.layers.size()) {
    throw ValidationError("estimate_cycles: counter rows do not match layer count");
  }
  const std::vector<Dims> shapes = infer_shapes(spec);
  const std::vector<std::string> names = layer_names(spec);

  CycleReport report;
  report.clock_hz = static_cast<uint64_t>(std::llround(hw.clock_mhz * 1e6));
  Dims in{spec.in_h, spec.in_w, spec.in_c};
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    LayerPerf row;
    row.layer_index = static_cast<uint32_t>(i);
    row.name = names[i];
    row.input_spikes = counters[i].input_spikes;
    if (const auto* conv = std::get_if<ConvSpec>(&spec.layers[i])) {
      row.kind = "conv";
      row.cycles = estimate_conv_cycles(conv->out_channels, conv->kernel, conv->in_channels,
                                        in.h, in.w, shapes[i].h, shapes[i].w, spec.timesteps,
                                        counters[i].input_spikes, hw.layers[i], hw.penc_width,
                                        hw.pipeline_fill);
    } else if (is_pool(spec.layers[i])) {
      row.kind = "pool";
    } else {
      const auto& dense = std::get<DenseSpec>(spec.layers[i]);
      row.kind = "dense";
      row.cycles = estimate_dense_cycles(dense.out_features, dense.in_features, spec.timesteps,
                                         counters[i].input_spikes, hw.layers[i], hw.penc_width,
                                         hw.pipeline_fill);
    }
    report.network_total += row.cycles.total();
    report.layers.push_back(std::move(row));
    in = shapes[i];
  }
  return report;
}

// Per-core storage demands of one layer placement.
struct LayerResources {
  uint64_t membrane_bits = 0;  // register-file bits across the layer's cores
  uint64_t weight_ff_bits = 0; // conv filter flip-flop bits
  uint64_t uram_rows = 0;      // dense weight rows (two 32-bit weights each)
  friend bool operator==(const LayerResources&, const LayerResources&) = default;
};

struct ResourceRow {
  uint32_t layer_index = 0;
  std::string name;
  std::string kind;
  LayerResources res;
};

struct ResourceReport {
  std::vector<ResourceRow> layers;
  LayerResources total;
};

inline LayerResources conv_resources(uint32_t c_out, uint32_t kernel, uint32_t c_in,
                                     uint32_t out_h, uint32_t out_w, HwEntry hw) {
  LayerResources r;
  r.membrane_bits =
      static_cast<uint64_t>(hw.nc_count) * 32 *
      ceil_div(static_cast<uint64_t>(out_h) * out_w, hw.chunk_count);
  r.weight_ff_bits = 32ull * kernel * kernel * c_in * c_out;
  return r;
}

inline LayerResources dense_resources(uint32_t out_features, uint32_t in_features, HwEntry hw) {
  LayerResources r;
  r.membrane_bits = static_cast<uint64_t>(hw.nc_count) * 32;
  r.uram_rows = ceil_div(out_features, 2) * in_features;
  return r;
}

inline ResourceReport estimate_resources(const NetworkSpec& spec, const HardwareConfig& hw) {
  const std::vector<Dims> shapes = infer_shapes(spec);
  const std::vector<std::string> names = layer_names(spec);
  ResourceReport report;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    ResourceRow row;
    row.layer_index = static_cast<uint32_t>(i);
    row.name = names[i];
    if (const auto* conv = std::get_if<ConvSpec>(&spec.layers[i])) {
      row.kind = "conv";
      row.res = conv_resources(conv->out_channels, conv->kernel, conv->in_channels, shapes[i].h,
                               shapes[i].w, hw.layers[i]);
    } else if (is_pool(spec.layers[i])) {
      row.kind = "pool";
    } else {
      const auto& dense = std::get<DenseSpec>(spec.layers[i]);
      row.kind = "dense";
      row.res = dense_resources(dense.out_features, dense.in_features, hw.layers[i]);
    }
    report.total.membrane_bits += row.res.membrane_bits;
    report.total.weight_ff_bits += row.res.weight_ff_bits;
    report.total.uram_rows += row.res.uram_rows;
    report.layers.push_back(std::move(row));
  }
  return report;
}

inline nlohmann::json cycle_report_json(const CycleReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerPerf& row : report.layers) {
    layers.push_back({{"layer_index", row.layer_index},
                      {"name", row.name},
                      {"kind", row.kind},
                      {"input_spikes", row.input_spikes},
                      {"penc_cycles", row.cycles.penc},
                      {"accum_cycles", row.cycles.accum},
                      {"activation_cycles", row.cycles.activ},
                      {"overhead_cycles", row.cycles.overhead},
                      {"total_cycles", row.cycles.total()}});
  }
  return nlohmann::json{{"layers", layers},
                        {"network_total_cycles", report.network_total},
                        {"fps", {{"numerator_hz", report.clock_hz},
                                 {"denominator_cycles", report.network_total},
                                 {"value", report.fps()}}}};
}

inline std::string cycle_report_csv(const CycleReport& report) {
  std::ostringstream os;
  os << "layer_index,name,kind,input_spikes,penc_cycles,accum_cycles,activation_cycles,"
        "overhead_cycles,total_cycles\n";
  for (const LayerPerf& row : report.layers) {
    os << row.layer_index << ',' << row.name << ',' << row.kind << ',' << row.input_spikes << ','
       << row.cycles.penc << ',' << row.cycles.accum << ',' << row.cycles.activ << ','
       << row.cycles.overhead << ',' << row.cycles.total() << '\n';
  }
  return os.str();
}

inline std::string cycle_report_text(const CycleReport& report) {
  std::ostringstream os;
  for (const LayerPerf& row : report.layers) {
    os << row.name << " (" << row.kind << "): events=" << row.input_spikes
       << " penc=" << row.cycles.penc << " accum=" << row.cycles.accum
       << " activ=" << row.cycles.activ << " fill=" << row.cycles.overhead
       << " total=" << row.cycles.total() << '\n';
  }
  os << "network total: " << report.network_total << " cycles\n";
  os << "throughput: " << report.fps() << " inferences/s at " << report.clock_hz << " Hz\n";
  return os.str();
}

inline nlohmann::json resource_report_json(const ResourceReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (const ResourceRow& row : report.layers) {
    layers.push_back({{"layer_index", row.layer_index},
                      {"name", row.name},
                      {"kind", row.kind},
                      {"membrane_bits", row.res.membrane_bits},
                      {"weight_ff_bits", row.res.weight_ff_bits},
                      {"uram_rows", row.res.uram_rows}});
  }
  return nlohmann::json{{"layers", layers},
                        {"total", {{"membrane_bits", report.total.membrane_bits},
                                   {"weight_ff_bits", report.total.weight_ff_bits},
                                   {"uram_rows", report.total.uram_rows}}}};
}

}  // namespace pulse
