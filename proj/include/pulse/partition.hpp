#pragma once

#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulse/engine.hpp"
#include "pulse/image.hpp"
#include "pulse/model.hpp"

namespace pulse {

// Work per layer, spike-weighted: every input event costs one membrane update
// per filter coefficient per output channel (conv) or one per output neuron
// (dense). Pool layers are fixed-function and carry no workload.
inline uint64_t workload_conv(uint32_t kernel, uint32_t c_out, uint64_t sum_spikes) {
  return static_cast<uint64_t>(kernel) * kernel * c_out * sum_spikes;
}

inline uint64_t workload_dense(uint32_t out_features, uint64_t sum_spikes) {
  return static_cast<uint64_t>(out_features) * sum_spikes;
}

inline uint64_t workload(const LayerSpec& layer, const LayerCounters& counters) {
  if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
    return workload_conv(conv->kernel, conv->out_channels, counters.input_spikes);
  }
  if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
    return workload_dense(dense->out_features, counters.input_spikes);
  }
  return 0;
}

struct WorkloadRow {
  uint32_t layer_index = 0;  // position in the network's layer list
  std::string name;
  std::string kind;      // conv | dense
  uint32_t units = 0;    // C_out or out_features
  uint64_t fan = 0;      // per-event update count: K^2 * C_out or out_features
  uint64_t spikes = 0;   // averaged input events per inference
  uint64_t workload = 0; // fan * spikes
  uint64_t cap = 0;      // largest useful core count
};

struct WorkloadProfile {
  std::string topology;
  uint32_t pop_per_class = 1;
  uint32_t samples = 0;
  uint64_t seed = 0;
  std::vector<WorkloadRow> rows;  // compute layers only
};

// Naive-mapping profiling pass: one core, one chunk everywhere. Sample k runs
// input k mod #inputs with seed + k; spike totals are averaged over samples
// with half-up rounding.
inline WorkloadProfile profile_workload(const NetworkSpec& spec, const Weights& weights,
                                        const std::vector<ImageTensor>& inputs, uint64_t seed,
                                        uint32_t samples = 0) {
  if (inputs.empty()) throw ValidationError("profile: at least one sample input is required");
  const uint32_t n = samples > 0 ? samples : static_cast<uint32_t>(inputs.size());
  const HardwareConfig naive = HardwareConfig::uniform(spec.layers.size(), 1, 1);

  std::vector<uint64_t> spike_sums(spec.layers.size(), 0);
  for (uint32_t k = 0; k < n; ++k) {
    const RunResult run = run_network(spec, weights, naive, inputs[k % inputs.size()], seed + k);
    for (size_t i = 0; i < spec.layers.size(); ++i) {
      spike_sums[i] += run.counters[i].input_spikes;
    }
  }

  WorkloadProfile profile;
  profile.topology = render_topology(spec);
  profile.pop_per_class = spec.pop_per_class;
  profile.samples = n;
  profile.seed = seed;
  const std::vector<std::string> names = layer_names(spec);
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    if (!is_compute(spec.layers[i])) continue;
    WorkloadRow row;
    row.layer_index = static_cast<uint32_t>(i);
    row.name = names[i];
    row.spikes = (2 * spike_sums[i] + n) / (2ull * n);
    if (const auto* conv = std::get_if<ConvSpec>(&spec.layers[i])) {
      row.kind = "conv";
      row.units = conv->out_channels;
      row.fan = static_cast<uint64_t>(conv->kernel) * conv->kernel * conv->out_channels;
      row.cap = conv->out_channels;
    } else {
      const auto& dense = std::get<DenseSpec>(spec.layers[i]);
      row.kind = "dense";
      row.units = dense.out_features;
      row.fan = dense.out_features;
      row.cap = dense.out_features;
    }
    row.workload = row.fan * row.spikes;
    profile.rows.push_back(std::move(row));
  }
  return profile;
}

// a/b > c/d for non-negative numerators and positive denominators.
inline bool ratio_greater(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return a * d > c * b;
}

// Greedy water-filling: start every layer at one core, then repeatedly grant
// a core to the bottleneck (largest W/N, ties to the earlier layer) until the
// budget runs out, the bottleneck hits its cap, or all workloads are zero.
// Minimizes max_l(W_l / N_l) subject to sum N_l <= budget and the caps.
inline std::vector<uint32_t> allocate_cores(std::span<const uint64_t> w,
                                            std::span<const uint64_t> caps, uint32_t budget) {
  const size_t n = w.size();
  if (n == 0) throw ValidationError("allocate: empty workload vector");
  if (caps.size() != n) throw ValidationError("allocate: cap vector length mismatch");
  if (budget < n) {
    throw ValidationError("allocate: budget " + std::to_string(budget) +
                          " is below the layer count " + std::to_string(n));
  }
  for (size_t i = 0; i < n; ++i) {
    if (caps[i] == 0) throw ValidationError("allocate: layer " + std::to_string(i) + " has cap 0");
  }

  std::vector<uint32_t> nc(n, 1);
  uint32_t remaining = budget - static_cast<uint32_t>(n);
  while (remaining > 0) {
    size_t best = 0;
    for (size_t i = 1; i < n; ++i) {
      if (ratio_greater(w[i], nc[i], w[best], nc[best])) best = i;
    }
    if (w[best] == 0) break;            // nothing left to speed up
    if (nc[best] >= caps[best]) break;  // bottleneck saturated; more cores cannot help
    ++nc[best];
    --remaining;
  }
  return nc;
}

struct AllocationResult {
  std::vector<uint32_t> nc;  // aligned with the profile's rows
  uint32_t used_cores = 0;
  // Bottleneck after allocation: the row attaining max W/N.
  uint32_t bottleneck_row = 0;
  uint64_t bottleneck_workload = 0;
  uint32_t bottleneck_cores = 1;
  double bottleneck_value() const {
    return static_cast<double>(bottleneck_workload) / bottleneck_cores;
  }
};

inline AllocationResult allocate(const WorkloadProfile& profile, uint32_t budget) {
  std::vector<uint64_t> w, caps;
  for (const WorkloadRow& row : profile.rows) {
    w.push_back(row.workload);
    caps.push_back(row.cap);
  }
  AllocationResult result;
  result.nc = allocate_cores(w, caps, budget);
  for (uint32_t c : result.nc) result.used_cores += c;
  for (size_t i = 1; i < result.nc.size(); ++i) {
    if (ratio_greater(w[i], result.nc[i], w[result.bottleneck_row],
                      result.nc[result.bottleneck_row])) {
      result.bottleneck_row = static_cast<uint32_t>(i);
    }
  }
  result.bottleneck_workload = w[result.bottleneck_row];
  result.bottleneck_cores = result.nc[result.bottleneck_row];
  return result;
}

inline nlohmann::json workload_profile_json(const WorkloadProfile& profile) {
  nlohmann::json rows = nlohmann::json::array();
  for (const WorkloadRow& row : profile.rows) {
    rows.push_back({{"layer_index", row.layer_index},
                    {"name", row.name},
                    {"kind", row.kind},
                    {"units", row.units},
                    {"fan", row.fan},
                    {"spikes", row.spikes},
                    {"workload", row.workload},
                    {"cap", row.cap}});
  }
  return nlohmann::json{{"format_version", 1},
                        {"topology", profile.topology},
                        {"pop_per_class", profile.pop_per_class},
                        {"samples", profile.samples},
                        {"seed", profile.seed},
                        {"rows", rows}};
}

inline WorkloadProfile workload_profile_from_json(const nlohmann::json& j) {
  try {
    WorkloadProfile profile;
    if (j.at("format_version").get<int>() != 1) {
      throw ParseError("profile: unsupported format_version");
    }
    profile.topology = j.at("topology").get<std::string>();
    profile.pop_per_class = j.at("pop_per_class").get<uint32_t>();
    profile.samples = j.at("samples").get<uint32_t>();
    profile.seed = j.at("seed").get<uint64_t>();
    for (const nlohmann::json& r : j.at("rows")) {
      WorkloadRow row;
      row.layer_index = r.at("layer_index").get<uint32_t>();
      row.name = r.at("name").get<std::string>();
      row.kind = r.at("kind").get<std::string>();
      row.units = r.at("units").get<uint32_t>();
      row.fan = r.at("fan").get<uint64_t>();
      row.spikes = r.at("spikes").get<uint64_t>();
      row.workload = r.at("workload").get<uint64_t>();
      row.cap = r.at("cap").get<uint64_t>();
      profile.rows.push_back(std::move(row));
    }
    return profile;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("profile: malformed JSON document: ") + e.what());
  }
}

inline std::string workload_profile_csv(const WorkloadProfile& profile) {
  std::ostringstream os;
  os << "layer_index,name,kind,units,fan,spikes,workload,cap\n";
  for (const WorkloadRow& row : profile.rows) {
    os << row.layer_index << ',' << row.name << ',' << row.kind << ',' << row.units << ','
       << row.fan << ',' << row.spikes << ',' << row.workload << ',' << row.cap << '\n';
  }
  return os.str();
}

inline std::string workload_profile_text(const WorkloadProfile& profile) {
  std::ostringstream os;
  for (const WorkloadRow& row : profile.rows) {
    os << row.name << " (" << row.kind << "): spikes=" << row.spikes << " fan=" << row.fan
       << " W=" << row.workload << " cap=" << row.cap << '\n';
  }
  return os.str();
}

// The allocation document lists nc_count for every layer of the topology
// (fixed-function pool layers pinned at 1), so it can be merged straight into
// a manifest's layers array.
inline nlohmann::json allocation_json(const WorkloadProfile& profile,
                                      const AllocationResult& result, uint32_t budget) {
  const NetworkSpec spec = parse_topology(profile.topology, profile.pop_per_class);
  const std::vector<std::string> names = layer_names(spec);
  std::vector<uint32_t> per_layer(spec.layers.size(), 1);
  for (size_t i = 0; i < profile.rows.size(); ++i) {
    per_layer[profile.rows[i].layer_index] = result.nc[i];
  }
  nlohmann::json layers = nlohmann::json::array();
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    layers.push_back({{"layer_index", i}, {"name", names[i]}, {"nc_count", per_layer[i]}});
  }
  const WorkloadRow& b = profile.rows[result.bottleneck_row];
  return nlohmann::json{{"format_version", 1},
                        {"topology", profile.topology},
                        {"budget", budget},
                        {"used_cores", result.used_cores},
                        {"bottleneck",
                         {{"name", b.name},
                          {"workload", result.bottleneck_workload},
                          {"nc_count", result.bottleneck_cores},
                          {"value", result.bottleneck_value()}}},
                        {"layers", layers}};
}

}  // namespace pulse
