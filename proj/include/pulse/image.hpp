#pragma once

#include <cstdint>
#include <vector>

#include "pulse/errors.hpp"

namespace pulse {

// Input intensity tensor, row-major [C][H][W], values in [0, 1].
struct ImageTensor {
  uint32_t c = 0;
  uint32_t h = 0;
  uint32_t w = 0;
  std::vector<float> data;  // size c*h*w

  ImageTensor() = default;
  ImageTensor(uint32_t c_, uint32_t h_, uint32_t w_)
      : c(c_), h(h_), w(w_), data(static_cast<size_t>(c_) * h_ * w_, 0.0f) {}

  float pixel(uint32_t ch, uint32_t y, uint32_t x) const {
    return data[(static_cast<size_t>(ch) * h + y) * w + x];
  }
  float& pixel(uint32_t ch, uint32_t y, uint32_t x) {
    return data[(static_cast<size_t>(ch) * h + y) * w + x];
  }
};

}  // namespace pulse
