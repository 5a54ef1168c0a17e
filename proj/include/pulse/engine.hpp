#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pulse/fixed_point.hpp"
#include "pulse/image.hpp"
#include "pulse/model.hpp"
#include "pulse/spike.hpp"

namespace pulse {

// Per-layer execution statistics gathered during a run. plane_events is
// indexed t*C_in + c for conv layers and t for dense layers (one flattened
// input train per timestep); pool layers record input_spikes only.
struct LayerCounters {
  uint64_t input_spikes = 0;           // sum of S_i over all input planes and timesteps
  std::vector<uint64_t> plane_events;  // events per compressed input spike train
  uint64_t accum_updates = 0;          // membrane adds performed
  uint64_t activ_evals = 0;            // threshold/leak evaluations
  uint64_t wrap_events = 0;            // adder wrap-arounds (diagnostic)
};

// One kernel tap scattered from a spike event: output neuron (nr, nc) takes
// weight (kr, kc).
struct TapUpdate {
  uint16_t kr = 0, kc = 0;
  uint16_t nr = 0, nc = 0;
  friend bool operator==(const TapUpdate&, const TapUpdate&) = default;
};

// Scatter form of stride-1 cross-correlation: the output neurons affected by
// a spike at (r, c) and the kernel tap each one takes. 'same' padding uses
// pad = (K-1)/2; updates landing outside the output plane are dropped.
inline std::vector<TapUpdate> affected_updates(uint32_t r, uint32_t c, uint32_t k,
                                               Padding padding, uint32_t out_h, uint32_t out_w) {
  std::vector<TapUpdate> taps;
  taps.reserve(static_cast<size_t>(k) * k);
  const int64_t pad = (padding == Padding::same) ? (static_cast<int64_t>(k) - 1) / 2 : 0;
  for (uint32_t kr = 0; kr < k; ++kr) {
    const int64_t nr = static_cast<int64_t>(r) + pad - kr;
    if (nr < 0 || nr >= out_h) continue;
    for (uint32_t kc = 0; kc < k; ++kc) {
      const int64_t nc = static_cast<int64_t>(c) + pad - kc;
      if (nc < 0 || nc >= out_w) continue;
      taps.push_back(TapUpdate{static_cast<uint16_t>(kr), static_cast<uint16_t>(kc),
                               static_cast<uint16_t>(nr), static_cast<uint16_t>(nc)});
    }
  }
  return taps;
}

struct LifParams {
  Fx32 beta{};
  Fx32 theta = fx_one;
};

// Chunk i covers output indices [i*q, min((i+1)*q, total)) with q = ceil(total/chunks);
// trailing chunks may be empty when chunks > total.
struct ChunkRange {
  uint32_t begin = 0, end = 0;
};

inline ChunkRange chunk_range(uint32_t total, uint32_t chunks, uint32_t index) {
  const uint64_t q = (static_cast<uint64_t>(total) + chunks - 1) / chunks;
  const uint64_t b = std::min<uint64_t>(q * index, total);
  const uint64_t e = std::min<uint64_t>(q * (index + 1), total);
  return ChunkRange{static_cast<uint32_t>(b), static_cast<uint32_t>(e)};
}

// Test hook: observes a chunk's membrane array right after the accumulation
// phase of a timestep, before bias/threshold/leak.
using MembraneProbe =
    std::function<void(uint32_t t, uint32_t ofm, uint32_t chunk_begin, std::span<const Fx32>)>;

struct ConvLayerDesc {
  uint32_t kernel = 0;
  uint32_t c_in = 0;
  uint32_t c_out = 0;
  Padding padding = Padding::same;
  uint32_t in_h = 0, in_w = 0;
  uint32_t out_h = 0, out_w = 0;
};

namespace detail {

// (weight offset within one OFM's filter bank, flat output neuron index)
struct FlatTap {
  uint32_t w_off = 0;
  uint32_t n_idx = 0;
};

}  // namespace detail

// Event-driven convolution over N parallel neural cores. Core `offset` owns
// OFMs {o : o mod N == offset} and sweeps them one spatial chunk at a time:
// the chunk's membranes live through all timesteps, each timestep replays the
// compressed spike events of every input plane, and the activation pass
// (bias, 3-bit threshold, soft reset, beta leak) runs once per timestep after
// all input channels. A neuron spikes at most once per timestep.
inline SpikeTensor run_conv_layer(const SpikeTensor& in, const ConvLayerDesc& d,
                                  std::span<const Fx32> w, std::span<const Fx32> bias,
                                  HwEntry hw, LifParams lif, LayerCounters& counters,
                                  const MembraneProbe& probe = {}) {
  const uint32_t timesteps = in.timesteps();
  SpikeTensor out(timesteps, d.c_out, d.out_h, d.out_w);

  counters.plane_events.assign(static_cast<size_t>(timesteps) * d.c_in, 0);

  // PENC + address generation, once per input plane: the tap lists are
  // identical for every core and OFM.
  const uint32_t taps_per_filter = d.kernel * d.kernel;
  std::vector<std::vector<detail::FlatTap>> plane_taps(static_cast<size_t>(timesteps) * d.c_in);
  for (uint32_t t = 0; t < timesteps; ++t) {
    for (uint32_t c = 0; c < d.c_in; ++c) {
      const EventList events = penc_compress(in, t, c);
      const size_t plane = static_cast<size_t>(t) * d.c_in + c;
      counters.plane_events[plane] = events.size();
      counters.input_spikes += events.size();
      std::vector<detail::FlatTap>& flat = plane_taps[plane];
      for (uint32_t e : events) {
        const auto [r, col] = index_to_coords(e, d.in_w);
        for (const TapUpdate& tap : affected_updates(r, col, d.kernel, d.padding, d.out_h, d.out_w)) {
          flat.push_back(detail::FlatTap{
              static_cast<uint32_t>(tap.kr) * d.kernel + tap.kc,
              static_cast<uint32_t>(tap.nr) * d.out_w + tap.nc});
        }
      }
    }
  }

  const uint32_t ofm_neurons = d.out_h * d.out_w;
  std::vector<Fx32> membrane;
  for (uint32_t core = 0; core < hw.nc_count; ++core) {
    for (uint32_t ofm = core; ofm < d.c_out; ofm += hw.nc_count) {
      const Fx32* filters = w.data() + static_cast<size_t>(ofm) * d.c_in * taps_per_filter;
      for (uint32_t chunk = 0; chunk < hw.chunk_count; ++chunk) {
        const ChunkRange range = chunk_range(ofm_neurons, hw.chunk_count, chunk);
        if (range.begin == range.end) continue;
        membrane.assign(range.end - range.begin, fx_zero);
        for (uint32_t t = 0; t < timesteps; ++t) {
          for (uint32_t c = 0; c < d.c_in; ++c) {
            const Fx32* filter = filters + static_cast<size_t>(c) * taps_per_filter;
            for (const detail::FlatTap& tap :
                 plane_taps[static_cast<size_t>(t) * d.c_in + c]) {
              if (tap.n_idx < range.begin || tap.n_idx >= range.end) continue;
              Fx32& u = membrane[tap.n_idx - range.begin];
              u = add_counted(u, filter[tap.w_off], counters.wrap_events);
              ++counters.accum_updates;
            }
          }
          if (probe) probe(t, ofm, range.begin, membrane);
          for (uint32_t n = range.begin; n < range.end; ++n) {
            Fx32& u = membrane[n - range.begin];
            u = add_counted(u, bias[ofm], counters.wrap_events);
            const bool s = spike_check(u);
            if (s) {
              u = soft_reset(u);
              out.set(t, ofm, n, true);
            }
            u = mul(lif.beta, u);
            ++counters.activ_evals;
          }
        }
      }
    }
  }
  return out;
}

// Dense layer: each output neuron is a one-neuron OFM, assigned to core
// j mod N. Input is the predecessor tensor flattened [C][H][W] per timestep.
inline SpikeTensor run_dense_layer(const SpikeTensor& in, uint32_t out_features,
                                   uint32_t in_features, std::span<const Fx32> w,
                                   std::span<const Fx32> bias, HwEntry hw, LifParams lif,
                                   LayerCounters& counters) {
  const uint32_t timesteps = in.timesteps();
  const uint64_t plane_bits = in.plane_bits();
  SpikeTensor out(timesteps, out_features, 1, 1);

  counters.plane_events.assign(timesteps, 0);
  std::vector<EventList> flat_events(timesteps);
  for (uint32_t t = 0; t < timesteps; ++t) {
    for (uint32_t c = 0; c < in.channels(); ++c) {
      for (uint32_t e : penc_compress(in, t, c)) {
        flat_events[t].push_back(static_cast<uint32_t>(c * plane_bits + e));
      }
    }
    counters.plane_events[t] = flat_events[t].size();
    counters.input_spikes += flat_events[t].size();
  }

  for (uint32_t core = 0; core < hw.nc_count; ++core) {
    for (uint32_t j = core; j < out_features; j += hw.nc_count) {
      const Fx32* row = w.data() + static_cast<size_t>(j) * in_features;
      for (uint32_t chunk = 0; chunk < hw.chunk_count; ++chunk) {
        const ChunkRange range = chunk_range(1, hw.chunk_count, chunk);
        if (range.begin == range.end) continue;
        Fx32 u = fx_zero;
        for (uint32_t t = 0; t < timesteps; ++t) {
          for (uint32_t e : flat_events[t]) {
            u = add_counted(u, row[e], counters.wrap_events);
            ++counters.accum_updates;
          }
          u = add_counted(u, bias[j], counters.wrap_events);
          const bool s = spike_check(u);
          if (s) {
            u = soft_reset(u);
            out.set(t, j, uint64_t{0}, true);
          }
          u = mul(lif.beta, u);
          ++counters.activ_evals;
        }
      }
    }
  }
  return out;
}

// OR-gate max pooling with window == stride; ragged borders are truncated.
inline SpikeTensor run_maxpool(const SpikeTensor& in, uint32_t window) {
  const uint32_t out_h = in.height() / window;
  const uint32_t out_w = in.width() / window;
  SpikeTensor out(in.timesteps(), in.channels(), out_h, out_w);
  for (uint32_t t = 0; t < in.timesteps(); ++t) {
    for (uint32_t c = 0; c < in.channels(); ++c) {
      for (uint32_t y = 0; y < out_h; ++y) {
        for (uint32_t x = 0; x < out_w; ++x) {
          bool any = false;
          for (uint32_t dy = 0; dy < window && !any; ++dy) {
            for (uint32_t dx = 0; dx < window && !any; ++dx) {
              any = in.get(t, c, y * window + dy, x * window + dx);
            }
          }
          if (any) out.set(t, c, y, x, true);
        }
      }
    }
  }
  return out;
}

struct RunResult {
  uint32_t predicted_class = 0;
  bool no_spike = false;
  SpikeTensor input_spikes;
  std::vector<SpikeTensor> layer_outputs;   // one per layer
  std::vector<LayerCounters> counters;      // one per layer
  std::vector<uint64_t> output_spike_counts;  // per final-layer neuron, summed over t
};

// Full inference: rate-encode the image, run the layers strictly in sequence
// (each consumes its predecessor's complete multi-timestep tensor), decode
// the final layer's population spike counts.
inline RunResult run_network(const NetworkSpec& spec, const Weights& weights,
                             const HardwareConfig& hw, const ImageTensor& image, uint64_t seed) {
  validate_network(spec);
  validate_hardware(spec, hw);
  validate_weights(spec, weights);
  if (spec.layers.empty() || !is_dense(spec.layers.back())) {
    throw ValidationError("run_network: network must end with a dense layer");
  }
  if (image.c != spec.in_c || image.h != spec.in_h || image.w != spec.in_w) {
    throw ValidationError("run_network: image dims do not match the network input");
  }
  const std::vector<Dims> shapes = infer_shapes(spec);
  const LifParams lif{spec.beta, spec.theta};

  RunResult result;
  result.input_spikes = rate_encode(image, spec.timesteps, seed);
  result.counters.resize(spec.layers.size());
  result.layer_outputs.reserve(spec.layers.size());

  const SpikeTensor* cur = &result.input_spikes;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    SpikeTensor next;
    if (const auto* conv = std::get_if<ConvSpec>(&spec.layers[i])) {
      ConvLayerDesc d{conv->kernel, conv->in_channels, conv->out_channels, conv->padding,
                      cur->height(), cur->width(), shapes[i].h, shapes[i].w};
      next = run_conv_layer(*cur, d, weights.layers[i].w, weights.layers[i].bias, hw.layers[i],
                            lif, result.counters[i]);
    } else if (const auto* pool = std::get_if<PoolSpec>(&spec.layers[i])) {
      result.counters[i].input_spikes = cur->total_spike_count();
      next = run_maxpool(*cur, pool->window);
    } else {
      const auto& dense = std::get<DenseSpec>(spec.layers[i]);
      next = run_dense_layer(*cur, dense.out_features, dense.in_features, weights.layers[i].w,
                             weights.layers[i].bias, hw.layers[i], lif, result.counters[i]);
    }
    result.layer_outputs.push_back(std::move(next));
    cur = &result.layer_outputs.back();
  }

  const auto& final_dense = std::get<DenseSpec>(spec.layers.back());
  result.output_spike_counts.assign(final_dense.out_features, 0);
  for (uint32_t t = 0; t < spec.timesteps; ++t) {
    for (uint32_t j = 0; j < final_dense.out_features; ++j) {
      result.output_spike_counts[j] += cur->get(t, j, uint64_t{0}) ? 1 : 0;
    }
  }
  const uint32_t classes = spec.classes > 0
                               ? spec.classes
                               : final_dense.out_features / spec.pop_per_class;
  const DecodeResult decoded =
      pop_decode(result.output_spike_counts, classes, spec.pop_per_class);
  result.predicted_class = decoded.class_index;
  result.no_spike = decoded.no_spike;
  return result;
}

}  // namespace pulse
