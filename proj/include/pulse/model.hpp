#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pulse/errors.hpp"
#include "pulse/fixed_point.hpp"

namespace pulse {

enum class Padding { same, valid };

inline std::string to_string(Padding p) { return p == Padding::same ? "same" : "valid"; }

inline Padding padding_from_string(std::string_view s) {
  if (s == "same") return Padding::same;
  if (s == "valid") return Padding::valid;
  throw ValidationError("padding must be 'same' or 'valid', got '" + std::string(s) + "'");
}

// Stride-1 convolution; in_channels is filled by shape inference.
struct ConvSpec {
  uint32_t out_channels = 0;
  uint32_t kernel = 0;
  Padding padding = Padding::same;
  uint32_t in_channels = 0;
  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

// OR-gate max pooling, window == stride.
struct PoolSpec {
  uint32_t window = 0;
  friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

// Fully connected layer; in_features is filled by shape inference. classifier
// marks the trailing topology token, whose out_features carries the
// population-size multiplier.
struct DenseSpec {
  uint32_t out_features = 0;
  uint32_t in_features = 0;
  bool classifier = false;
  friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

using LayerSpec = std::variant<ConvSpec, PoolSpec, DenseSpec>;

inline bool is_conv(const LayerSpec& l) { return std::holds_alternative<ConvSpec>(l); }
inline bool is_pool(const LayerSpec& l) { return std::holds_alternative<PoolSpec>(l); }
inline bool is_dense(const LayerSpec& l) { return std::holds_alternative<DenseSpec>(l); }

// Conv and dense layers carry weights and occupy neural cores; pooling is
// fixed-function OR gating.
inline bool is_compute(const LayerSpec& l) { return !is_pool(l); }

struct NetworkSpec {
  uint32_t in_h = 0, in_w = 0, in_c = 1;
  std::vector<LayerSpec> layers;
  uint32_t timesteps = 1;
  Fx32 beta{};
  Fx32 theta = fx_one;  // the threshold comparator is hardwired to 1.0
  uint32_t classes = 0;
  uint32_t pop_per_class = 1;
};

// Output dims of a layer.
struct Dims {
  uint32_t h = 0, w = 0, c = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
  uint64_t flat() const { return static_cast<uint64_t>(h) * w * c; }
};

// Output (H, W, C) per layer. Also the validator for the layer chain: throws
// on non-positive intermediate dims, even kernels under 'same' padding, and
// any in_channels/in_features already resolved to a conflicting value.
inline std::vector<Dims> infer_shapes(const NetworkSpec& spec) {
  std::vector<Dims> out;
  out.reserve(spec.layers.size());
  Dims cur{spec.in_h, spec.in_w, spec.in_c};
  if (cur.h == 0 || cur.w == 0 || cur.c == 0) {
    throw ValidationError("infer_shapes: input dims must be positive");
  }
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    const std::string where = "layer " + std::to_string(i);
    if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
      if (conv->kernel < 1) throw ValidationError(where + ": conv kernel must be >= 1");
      if (conv->out_channels < 1) throw ValidationError(where + ": conv needs out_channels >= 1");
      if (conv->padding == Padding::same && conv->kernel % 2 == 0) {
        throw ValidationError(where + ": 'same' padding requires an odd kernel, got " +
                              std::to_string(conv->kernel));
      }
      if (conv->in_channels != 0 && conv->in_channels != cur.c) {
        throw ValidationError(where + ": in_channels " + std::to_string(conv->in_channels) +
                              " does not match upstream channels " + std::to_string(cur.c));
      }
      Dims next{cur.h, cur.w, conv->out_channels};
      if (conv->padding == Padding::valid) {
        if (cur.h < conv->kernel || cur.w < conv->kernel) {
          throw ValidationError(where + ": 'valid' conv kernel " + std::to_string(conv->kernel) +
                                " larger than input " + std::to_string(cur.h) + "x" +
                                std::to_string(cur.w));
        }
        next.h = cur.h - conv->kernel + 1;
        next.w = cur.w - conv->kernel + 1;
      }
      cur = next;
    } else if (const auto* pool = std::get_if<PoolSpec>(&layer)) {
      if (pool->window < 1) throw ValidationError(where + ": pool window must be >= 1");
      Dims next{cur.h / pool->window, cur.w / pool->window, cur.c};
      if (next.h == 0 || next.w == 0) {
        throw ValidationError(where + ": pool window " + std::to_string(pool->window) +
                              " collapses " + std::to_string(cur.h) + "x" + std::to_string(cur.w) +
                              " to zero");
      }
      cur = next;
    } else {
      const auto& dense = std::get<DenseSpec>(layer);
      if (dense.out_features < 1) throw ValidationError(where + ": dense needs out_features >= 1");
      const uint64_t flat = cur.flat();
      if (dense.in_features != 0 && dense.in_features != flat) {
        throw ValidationError(where + ": dense in_features " + std::to_string(dense.in_features) +
                              " does not match flattened upstream size " + std::to_string(flat));
      }
      cur = Dims{1, 1, dense.out_features};
    }
    out.push_back(cur);
  }
  return out;
}

// Runs shape inference and writes the resolved in_channels / in_features back
// into the layer list. Derived fields are cleared first, so this re-resolves
// cleanly after a geometry edit (e.g. a padding override).
inline void resolve_shapes(NetworkSpec& spec) {
  for (LayerSpec& layer : spec.layers) {
    if (auto* conv = std::get_if<ConvSpec>(&layer)) {
      conv->in_channels = 0;
    } else if (auto* dense = std::get_if<DenseSpec>(&layer)) {
      dense->in_features = 0;
    }
  }
  infer_shapes(spec);  // validates
  Dims cur{spec.in_h, spec.in_w, spec.in_c};
  for (LayerSpec& layer : spec.layers) {
    if (auto* conv = std::get_if<ConvSpec>(&layer)) {
      conv->in_channels = cur.c;
      if (conv->padding == Padding::valid) {
        cur.h = cur.h - conv->kernel + 1;
        cur.w = cur.w - conv->kernel + 1;
      }
      cur.c = conv->out_channels;
    } else if (auto* pool = std::get_if<PoolSpec>(&layer)) {
      cur.h /= pool->window;
      cur.w /= pool->window;
    } else {
      auto& dense = std::get<DenseSpec>(layer);
      dense.in_features = static_cast<uint32_t>(cur.flat());
      cur = Dims{1, 1, dense.out_features};
    }
  }
}

// Full-network invariants beyond the layer chain.
inline void validate_network(const NetworkSpec& spec) {
  infer_shapes(spec);
  if (spec.timesteps < 1) throw ValidationError("network: timesteps must be >= 1");
  if (spec.theta != fx_one) throw ValidationError("network: theta must be exactly 1.0");
  if (!(spec.beta.raw > 0 && spec.beta.raw < kFxOneRaw)) {
    throw ValidationError("network: beta must satisfy 0 < beta < 1");
  }
  if (spec.pop_per_class < 1) throw ValidationError("network: pop_per_class must be >= 1");
  if (spec.classes > 0) {
    if (spec.layers.empty() || !is_dense(spec.layers.back())) {
      throw ValidationError("network: a classifying network must end with a dense layer");
    }
    const auto& dense = std::get<DenseSpec>(spec.layers.back());
    const uint64_t expect = static_cast<uint64_t>(spec.classes) * spec.pop_per_class;
    if (dense.out_features != expect) {
      throw ValidationError("network: final dense out_features " +
                            std::to_string(dense.out_features) + " != classes*pop (" +
                            std::to_string(expect) + ")");
    }
  }
}

namespace detail {

inline uint32_t parse_uint(std::string_view token, size_t token_index, std::string_view what) {
  if (token.empty()) {
    throw ParseError("topology token " + std::to_string(token_index) + ": empty " +
                     std::string(what));
  }
  uint64_t v = 0;
  for (char ch : token) {
    if (ch < '0' || ch > '9') {
      throw ParseError("topology token " + std::to_string(token_index) + ": '" +
                       std::string(token) + "' is not a valid " + std::string(what));
    }
    v = v * 10 + static_cast<uint64_t>(ch - '0');
    if (v > UINT32_MAX) {
      throw ParseError("topology token " + std::to_string(token_index) + ": value overflows");
    }
  }
  return static_cast<uint32_t>(v);
}

}  // namespace detail

// Compact topology grammar: "HxW[xC]" then '-'-separated tokens
//   <n>C<k>   conv, n filters of k x k
//   P<z>      max pool z x z (MP<z> accepted as a synonym)
//   <n>       dense; the trailing integer is the class count and expands to
//             n * pop_per_class output neurons
// e.g. "28x28-32C3-32C3-P3-10C3-10".
inline NetworkSpec parse_topology(std::string_view s, uint32_t pop_per_class = 1) {
  if (pop_per_class < 1) throw ValidationError("parse_topology: pop_per_class must be >= 1");
  NetworkSpec spec;
  spec.pop_per_class = pop_per_class;

  std::vector<std::string_view> tokens;
  size_t pos = 0;
  while (pos <= s.size()) {
    const size_t dash = s.find('-', pos);
    const size_t end = (dash == std::string_view::npos) ? s.size() : dash;
    tokens.push_back(s.substr(pos, end - pos));
    if (dash == std::string_view::npos) break;
    pos = dash + 1;
  }
  if (tokens.empty() || tokens[0].empty()) throw ParseError("topology: missing input dims token");

  {
    const std::string_view dims = tokens[0];
    size_t x1 = dims.find('x');
    if (x1 == std::string_view::npos) {
      throw ParseError("topology token 0: input dims '" + std::string(dims) +
                       "' must look like HxW or HxWxC");
    }
    size_t x2 = dims.find('x', x1 + 1);
    spec.in_h = detail::parse_uint(dims.substr(0, x1), 0, "input height");
    if (x2 == std::string_view::npos) {
      spec.in_w = detail::parse_uint(dims.substr(x1 + 1), 0, "input width");
      spec.in_c = 1;
    } else {
      spec.in_w = detail::parse_uint(dims.substr(x1 + 1, x2 - x1 - 1), 0, "input width");
      spec.in_c = detail::parse_uint(dims.substr(x2 + 1), 0, "input channels");
    }
  }

  size_t last_dense = SIZE_MAX;
  for (size_t i = 1; i < tokens.size(); ++i) {
    const std::string_view tok = tokens[i];
    if (tok.empty()) throw ParseError("topology token " + std::to_string(i) + ": empty token");
    if (tok[0] == 'P' || (tok.size() >= 2 && tok[0] == 'M' && tok[1] == 'P')) {
      const std::string_view num = tok.substr(tok[0] == 'P' ? 1 : 2);
      spec.layers.push_back(PoolSpec{detail::parse_uint(num, i, "pool window")});
    } else if (const size_t cpos = tok.find('C'); cpos != std::string_view::npos) {
      ConvSpec conv;
      conv.out_channels = detail::parse_uint(tok.substr(0, cpos), i, "conv channel count");
      conv.kernel = detail::parse_uint(tok.substr(cpos + 1), i, "conv kernel size");
      spec.layers.push_back(conv);
    } else {
      DenseSpec dense;
      dense.out_features = detail::parse_uint(tok, i, "dense size");
      last_dense = spec.layers.size();
      spec.layers.push_back(dense);
    }
  }

  // The trailing integer token is the classifier: classes * pop neurons.
  if (last_dense != SIZE_MAX && last_dense == spec.layers.size() - 1) {
    auto& dense = std::get<DenseSpec>(spec.layers.back());
    spec.classes = dense.out_features;
    const uint64_t expanded = static_cast<uint64_t>(dense.out_features) * pop_per_class;
    if (expanded > UINT32_MAX) throw ValidationError("topology: classifier size overflows");
    dense.out_features = static_cast<uint32_t>(expanded);
    dense.classifier = true;
  }

  resolve_shapes(spec);
  return spec;
}

// Canonical inverse of parse_topology: pooling renders as P<z>, channels are
// omitted when 1, and the classifier renders its class count.
inline std::string render_topology(const NetworkSpec& spec) {
  std::string s = std::to_string(spec.in_h) + "x" + std::to_string(spec.in_w);
  if (spec.in_c != 1) s += "x" + std::to_string(spec.in_c);
  for (const LayerSpec& layer : spec.layers) {
    s += '-';
    if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
      s += std::to_string(conv->out_channels) + "C" + std::to_string(conv->kernel);
    } else if (const auto* pool = std::get_if<PoolSpec>(&layer)) {
      s += "P" + std::to_string(pool->window);
    } else {
      const auto& dense = std::get<DenseSpec>(layer);
      s += std::to_string(dense.classifier ? dense.out_features / spec.pop_per_class
                                           : dense.out_features);
    }
  }
  return s;
}

// Per-layer design-time parameters of the hardware generator.
struct HwEntry {
  uint32_t nc_count = 1;    // output-channel unroll factor N
  uint32_t chunk_count = 1; // OFM spatial chunking divisor
  friend bool operator==(const HwEntry&, const HwEntry&) = default;
};

struct HardwareConfig {
  std::vector<HwEntry> layers;  // aligned with NetworkSpec::layers; pool entries inert
  double clock_mhz = 125.0;
  uint32_t penc_width = 32;    // spike-train bits scanned per PENC cycle
  uint32_t pipeline_fill = 4;  // pipeline fill cycles per plane iteration

  static HardwareConfig uniform(size_t n_layers, uint32_t nc = 1, uint32_t chunk = 1) {
    HardwareConfig hw;
    hw.layers.assign(n_layers, HwEntry{nc, chunk});
    return hw;
  }
};

inline void validate_hardware(const NetworkSpec& spec, const HardwareConfig& hw) {
  if (hw.layers.size() != spec.layers.size()) {
    throw ValidationError("hardware: " + std::to_string(hw.layers.size()) +
                          " entries for " + std::to_string(spec.layers.size()) + " layers");
  }
  if (!(hw.clock_mhz > 0)) throw ValidationError("hardware: clock_mhz must be positive");
  if (hw.penc_width < 1) throw ValidationError("hardware: penc_width must be >= 1");
  for (size_t i = 0; i < hw.layers.size(); ++i) {
    const HwEntry& e = hw.layers[i];
    const std::string where = "hardware: layer " + std::to_string(i);
    if (e.nc_count < 1 || e.chunk_count < 1) {
      throw ValidationError(where + ": nc_count and chunk_count must be >= 1");
    }
    if (const auto* conv = std::get_if<ConvSpec>(&spec.layers[i])) {
      if (e.nc_count > conv->out_channels) {
        throw ValidationError(where + ": nc_count " + std::to_string(e.nc_count) +
                              " exceeds out_channels " + std::to_string(conv->out_channels));
      }
    } else if (const auto* dense = std::get_if<DenseSpec>(&spec.layers[i])) {
      if (e.nc_count > dense->out_features) {
        throw ValidationError(where + ": nc_count " + std::to_string(e.nc_count) +
                              " exceeds out_features " + std::to_string(dense->out_features));
      }
    }
  }
}

// Fixed-point parameter tensors, aligned with NetworkSpec::layers. Pool layers
// hold empty vectors. Conv: w is [C_out][C_in][K][K] row-major, bias [C_out].
// Dense: w is [out][in], bias [out].
struct LayerWeights {
  std::vector<Fx32> w;
  std::vector<Fx32> bias;
};

struct Weights {
  std::vector<LayerWeights> layers;
};

inline uint64_t expected_weight_count(const LayerSpec& layer) {
  if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
    return static_cast<uint64_t>(conv->out_channels) * conv->in_channels * conv->kernel *
           conv->kernel;
  }
  if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
    return static_cast<uint64_t>(dense->out_features) * dense->in_features;
  }
  return 0;
}

inline uint64_t expected_bias_count(const LayerSpec& layer) {
  if (const auto* conv = std::get_if<ConvSpec>(&layer)) return conv->out_channels;
  if (const auto* dense = std::get_if<DenseSpec>(&layer)) return dense->out_features;
  return 0;
}

inline void validate_weights(const NetworkSpec& spec, const Weights& weights) {
  if (weights.layers.size() != spec.layers.size()) {
    throw ValidationError("weights: " + std::to_string(weights.layers.size()) +
                          " entries for " + std::to_string(spec.layers.size()) + " layers");
  }
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const uint64_t want_w = expected_weight_count(spec.layers[i]);
    const uint64_t want_b = expected_bias_count(spec.layers[i]);
    if (weights.layers[i].w.size() != want_w) {
      throw ValidationError("weights: layer " + std::to_string(i) + " has " +
                            std::to_string(weights.layers[i].w.size()) + " weights, expected " +
                            std::to_string(want_w));
    }
    if (weights.layers[i].bias.size() != want_b) {
      throw ValidationError("weights: layer " + std::to_string(i) + " has " +
                            std::to_string(weights.layers[i].bias.size()) +
                            " bias values, expected " + std::to_string(want_b));
    }
  }
}

// Display names, one ordinal per kind: conv1, conv2, pool1, fc1, ...
inline std::vector<std::string> layer_names(const NetworkSpec& spec) {
  std::vector<std::string> names;
  names.reserve(spec.layers.size());
  uint32_t n_conv = 0, n_pool = 0, n_fc = 0;
  for (const LayerSpec& layer : spec.layers) {
    if (is_conv(layer)) {
      names.push_back("conv" + std::to_string(++n_conv));
    } else if (is_pool(layer)) {
      names.push_back("pool" + std::to_string(++n_pool));
    } else {
      names.push_back("fc" + std::to_string(++n_fc));
    }
  }
  return names;
}

}  // namespace pulse
