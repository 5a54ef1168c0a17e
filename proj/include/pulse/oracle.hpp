#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "pulse/engine.hpp"
#include "pulse/fixed_point.hpp"
#include "pulse/model.hpp"
#include "pulse/spike.hpp"

namespace pulse {

// Reference datapaths for the gather-form simulator below. The fixed-point
// policy must agree bit-for-bit with the event-driven engine (modular addition
// is order-independent); the real policy runs the same schedule in doubles.
struct FxpDatapath {
  using Value = Fx32;
  static Value zero() { return fx_zero; }
  static Value acc(Value a, Fx32 w, uint64_t& wraps) { return add_counted(a, w, wraps); }
  static bool fire(Value u, Fx32 /*theta*/) { return spike_check(u); }
  static Value reset(Value u) { return soft_reset(u); }
  static Value leak(Fx32 beta, Value u) { return mul(beta, u); }
  static double real(Value u) { return to_double(u); }
};

struct RealDatapath {
  using Value = double;
  static Value zero() { return 0.0; }
  static Value acc(Value a, Fx32 w, uint64_t&) { return a + to_double(w); }
  static bool fire(Value u, Fx32 theta) { return u >= to_double(theta); }
  static Value reset(Value u) { return u - 1.0; }
  static Value leak(Fx32 beta, Value u) { return to_double(beta) * u; }
  static double real(Value u) { return u; }
};

template <typename Datapath>
struct OracleRun {
  uint32_t predicted_class = 0;
  bool no_spike = false;
  SpikeTensor input_spikes;
  std::vector<SpikeTensor> layer_outputs;
  // membranes[layer][t] = post-accumulation snapshot (before bias), flattened
  // [o][y][x] for conv, [j] for dense; empty unless capture was requested.
  std::vector<std::vector<std::vector<typename Datapath::Value>>> membranes;
  uint64_t wrap_events = 0;
};

// Gather-form convolution: output (y, x) of channel o sums tap (kr, kc) of
// input channel c whenever input (y + kr - pad, x + kc - pad) spiked. This is
// the textbook dual of the engine's scatter loop and shares no address logic
// with it. Membranes persist across timesteps; activation order matches the
// hardware: accumulate all channels, add bias, threshold, soft reset, leak.
template <typename Datapath>
SpikeTensor oracle_conv(const SpikeTensor& in, const ConvLayerDesc& d, std::span<const Fx32> w,
                        std::span<const Fx32> bias, LifParams lif, uint64_t& wrap_events,
                        std::vector<std::vector<typename Datapath::Value>>* capture = nullptr) {
  using V = typename Datapath::Value;
  const uint32_t timesteps = in.timesteps();
  SpikeTensor out(timesteps, d.c_out, d.out_h, d.out_w);
  const int64_t pad = (d.padding == Padding::same) ? (static_cast<int64_t>(d.kernel) - 1) / 2 : 0;
  const size_t plane = static_cast<size_t>(d.out_h) * d.out_w;

  std::vector<V> mem(static_cast<size_t>(d.c_out) * plane, Datapath::zero());
  if (capture) capture->assign(timesteps, {});
  for (uint32_t t = 0; t < timesteps; ++t) {
    for (uint32_t o = 0; o < d.c_out; ++o) {
      const Fx32* filters = w.data() + static_cast<size_t>(o) * d.c_in * d.kernel * d.kernel;
      for (uint32_t y = 0; y < d.out_h; ++y) {
        for (uint32_t x = 0; x < d.out_w; ++x) {
          V& u = mem[o * plane + static_cast<size_t>(y) * d.out_w + x];
          for (uint32_t c = 0; c < d.c_in; ++c) {
            for (uint32_t kr = 0; kr < d.kernel; ++kr) {
              const int64_t iy = static_cast<int64_t>(y) + kr - pad;
              if (iy < 0 || iy >= d.in_h) continue;
              for (uint32_t kc = 0; kc < d.kernel; ++kc) {
                const int64_t ix = static_cast<int64_t>(x) + kc - pad;
                if (ix < 0 || ix >= d.in_w) continue;
                if (in.get(t, c, static_cast<uint32_t>(iy), static_cast<uint32_t>(ix))) {
                  u = Datapath::acc(u, filters[(static_cast<size_t>(c) * d.kernel + kr) * d.kernel + kc],
                                    wrap_events);
                }
              }
            }
          }
        }
      }
    }
    if (capture) (*capture)[t] = mem;
    for (uint32_t o = 0; o < d.c_out; ++o) {
      for (size_t n = 0; n < plane; ++n) {
        V& u = mem[o * plane + n];
        u = Datapath::acc(u, bias[o], wrap_events);
        if (Datapath::fire(u, lif.theta)) {
          u = Datapath::reset(u);
          out.set(t, o, static_cast<uint64_t>(n), true);
        }
        u = Datapath::leak(lif.beta, u);
      }
    }
  }
  return out;
}

template <typename Datapath>
SpikeTensor oracle_dense(const SpikeTensor& in, uint32_t out_features, uint32_t in_features,
                         std::span<const Fx32> w, std::span<const Fx32> bias, LifParams lif,
                         uint64_t& wrap_events,
                         std::vector<std::vector<typename Datapath::Value>>* capture = nullptr) {
  using V = typename Datapath::Value;
  const uint32_t timesteps = in.timesteps();
  const uint64_t plane_bits = in.plane_bits();
  SpikeTensor out(timesteps, out_features, 1, 1);

  std::vector<V> mem(out_features, Datapath::zero());
  if (capture) capture->assign(timesteps, {});
  for (uint32_t t = 0; t < timesteps; ++t) {
    for (uint32_t j = 0; j < out_features; ++j) {
      const Fx32* row = w.data() + static_cast<size_t>(j) * in_features;
      V& u = mem[j];
      for (uint32_t c = 0; c < in.channels(); ++c) {
        for (uint64_t i = 0; i < plane_bits; ++i) {
          if (in.get(t, c, i)) u = Datapath::acc(u, row[c * plane_bits + i], wrap_events);
        }
      }
    }
    if (capture) (*capture)[t] = mem;
    for (uint32_t j = 0; j < out_features; ++j) {
      V& u = mem[j];
      u = Datapath::acc(u, bias[j], wrap_events);
      if (Datapath::fire(u, lif.theta)) {
        u = Datapath::reset(u);
        out.set(t, j, uint64_t{0}, true);
      }
      u = Datapath::leak(lif.beta, u);
    }
  }
  return out;
}

inline SpikeTensor oracle_maxpool(const SpikeTensor& in, uint32_t window) {
  const uint32_t out_h = in.height() / window;
  const uint32_t out_w = in.width() / window;
  SpikeTensor out(in.timesteps(), in.channels(), out_h, out_w);
  for (uint32_t t = 0; t < in.timesteps(); ++t) {
    for (uint32_t c = 0; c < in.channels(); ++c) {
      for (uint32_t y = 0; y < in.height(); ++y) {
        for (uint32_t x = 0; x < in.width(); ++x) {
          if (y / window < out_h && x / window < out_w && in.get(t, c, y, x)) {
            out.set(t, c, y / window, x / window, true);
          }
        }
      }
    }
  }
  return out;
}

// Reference inference, hardware-free: no cores, no chunks, no event lists.
template <typename Datapath>
OracleRun<Datapath> oracle_run(const NetworkSpec& spec, const Weights& weights,
                               const ImageTensor& image, uint64_t seed,
                               bool capture_membranes = false) {
  validate_network(spec);
  validate_weights(spec, weights);
  if (spec.layers.empty() || !is_dense(spec.layers.back())) {
    throw ValidationError("oracle_run: network must end with a dense layer");
  }
  const std::vector<Dims> shapes = infer_shapes(spec);
  const LifParams lif{spec.beta, spec.theta};

  OracleRun<Datapath> result;
  result.input_spikes = rate_encode(image, spec.timesteps, seed);
  result.membranes.resize(spec.layers.size());
  result.layer_outputs.reserve(spec.layers.size());

  const SpikeTensor* cur = &result.input_spikes;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    auto* capture = capture_membranes ? &result.membranes[i] : nullptr;
    SpikeTensor next;
    if (const auto* conv = std::get_if<ConvSpec>(&spec.layers[i])) {
      ConvLayerDesc d{conv->kernel, conv->in_channels, conv->out_channels, conv->padding,
                      cur->height(), cur->width(), shapes[i].h, shapes[i].w};
      next = oracle_conv<Datapath>(*cur, d, weights.layers[i].w, weights.layers[i].bias, lif,
                                   result.wrap_events, capture);
    } else if (const auto* pool = std::get_if<PoolSpec>(&spec.layers[i])) {
      next = oracle_maxpool(*cur, pool->window);
    } else {
      const auto& dense = std::get<DenseSpec>(spec.layers[i]);
      next = oracle_dense<Datapath>(*cur, dense.out_features, dense.in_features,
                                    weights.layers[i].w, weights.layers[i].bias, lif,
                                    result.wrap_events, capture);
    }
    result.layer_outputs.push_back(std::move(next));
    cur = &result.layer_outputs.back();
  }

  const auto& final_dense = std::get<DenseSpec>(spec.layers.back());
  std::vector<uint64_t> totals(final_dense.out_features, 0);
  for (uint32_t t = 0; t < spec.timesteps; ++t) {
    for (uint32_t j = 0; j < final_dense.out_features; ++j) {
      totals[j] += cur->get(t, j, uint64_t{0}) ? 1 : 0;
    }
  }
  const uint32_t classes =
      spec.classes > 0 ? spec.classes : final_dense.out_features / spec.pop_per_class;
  const DecodeResult decoded = pop_decode(totals, classes, spec.pop_per_class);
  result.predicted_class = decoded.class_index;
  result.no_spike = decoded.no_spike;
  return result;
}

}  // namespace pulse
