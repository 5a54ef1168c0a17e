#pragma once

#include <cmath>
#include <cstdint>
#include <variant>

#include "pulse/image.hpp"
#include "pulse/model.hpp"
#include "pulse/prng.hpp"

namespace pulse {

// Fan-in of one output unit: how many weights can feed it per timestep.
inline uint64_t layer_fan_in(const LayerSpec& layer) {
  if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
    return static_cast<uint64_t>(conv->kernel) * conv->kernel * conv->in_channels;
  }
  if (const auto* dense = std::get_if<DenseSpec>(&layer)) return dense->in_features;
  return 0;
}

// Weights and biases drawn uniformly from [-scale/sqrt(fan_in), +scale/sqrt(fan_in)]
// per layer, so activity neither dies nor saturates as fan-in grows. The draw
// order (per layer: all weights, then all biases) is part of the format.
inline Weights random_weights(const NetworkSpec& spec, uint64_t seed, double weight_scale = 1.0) {
  SplitMix64 rng(seed);
  Weights weights;
  weights.layers.resize(spec.layers.size());
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const uint64_t fan = layer_fan_in(spec.layers[i]);
    if (fan == 0) continue;  // pool layers have no parameters
    const double s = weight_scale / std::sqrt(static_cast<double>(fan));
    LayerWeights& lw = weights.layers[i];
    lw.w.resize(expected_weight_count(spec.layers[i]));
    lw.bias.resize(expected_bias_count(spec.layers[i]));
    for (Fx32& w : lw.w) w = encode(rng.next_in(-s, s));
    for (Fx32& b : lw.bias) b = encode(rng.next_in(-s, s));
  }
  return weights;
}

// Image whose rate-coded spike train has expected sparsity drawn uniformly
// from [sparsity_lo, sparsity_hi]: with target density d = 1 - sparsity, a
// pixel is either dark or uniform such that the mean pixel value is exactly d.
inline ImageTensor random_image(uint32_t c, uint32_t h, uint32_t w, uint64_t seed,
                                double sparsity_lo = 0.83, double sparsity_hi = 0.95) {
  if (!(0.0 <= sparsity_lo && sparsity_lo <= sparsity_hi && sparsity_hi <= 1.0)) {
    throw ValidationError("random_image: sparsity bounds must satisfy 0 <= lo <= hi <= 1");
  }
  SplitMix64 rng(seed);
  const double d = 1.0 - rng.next_in(sparsity_lo, sparsity_hi);
  ImageTensor img(c, h, w);
  for (float& p : img.data) {
    if (2.0 * d <= 1.0) {
      p = rng.next_unit() < 2.0 * d ? static_cast<float>(rng.next_unit()) : 0.0f;
    } else {
      p = static_cast<float>(rng.next_in(2.0 * d - 1.0, 1.0));
    }
  }
  return img;
}

}  // namespace pulse
