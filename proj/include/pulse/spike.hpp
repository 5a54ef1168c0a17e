#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pulse/errors.hpp"
#include "pulse/image.hpp"
#include "pulse/prng.hpp"

namespace pulse {

// Binary activation maps over (timestep, channel, row, col). Bits are packed
// row-major within each (t, c) plane, 64 per word, LSB first; padding bits in
// the top word are kept zero so whole-tensor equality is word equality.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(uint32_t t, uint32_t c, uint32_t h, uint32_t w)
      : t_(t),
        c_(c),
        h_(h),
        w_(w),
        words_per_plane_((static_cast<uint64_t>(h) * w + 63) / 64),
        words_(static_cast<size_t>(t) * c * words_per_plane_, 0) {}

  uint32_t timesteps() const { return t_; }
  uint32_t channels() const { return c_; }
  uint32_t height() const { return h_; }
  uint32_t width() const { return w_; }
  uint64_t plane_bits() const { return static_cast<uint64_t>(h_) * w_; }

  bool get(uint32_t t, uint32_t c, uint64_t i) const {
    const uint64_t* p = plane_ptr(t, c);
    return (p[i >> 6] >> (i & 63)) & 1;
  }
  bool get(uint32_t t, uint32_t c, uint32_t y, uint32_t x) const {
    return get(t, c, static_cast<uint64_t>(y) * w_ + x);
  }

  void set(uint32_t t, uint32_t c, uint64_t i, bool v) {
    uint64_t* p = plane_ptr(t, c);
    const uint64_t mask = uint64_t{1} << (i & 63);
    if (v) {
      p[i >> 6] |= mask;
    } else {
      p[i >> 6] &= ~mask;
    }
  }
  void set(uint32_t t, uint32_t c, uint32_t y, uint32_t x, bool v) {
    set(t, c, static_cast<uint64_t>(y) * w_ + x, v);
  }

  std::span<const uint64_t> plane(uint32_t t, uint32_t c) const {
    return {plane_ptr(t, c), static_cast<size_t>(words_per_plane_)};
  }

  uint64_t plane_spike_count(uint32_t t, uint32_t c) const {
    uint64_t n = 0;
    for (uint64_t word : plane(t, c)) n += static_cast<uint64_t>(std::popcount(word));
    return n;
  }

  uint64_t total_spike_count() const {
    uint64_t n = 0;
    for (uint64_t word : words_) n += static_cast<uint64_t>(std::popcount(word));
    return n;
  }

  friend bool operator==(const SpikeTensor&, const SpikeTensor&) = default;

 private:
  const uint64_t* plane_ptr(uint32_t t, uint32_t c) const {
    return words_.data() + (static_cast<size_t>(t) * c_ + c) * words_per_plane_;
  }
  uint64_t* plane_ptr(uint32_t t, uint32_t c) {
    return words_.data() + (static_cast<size_t>(t) * c_ + c) * words_per_plane_;
  }

  uint32_t t_ = 0, c_ = 0, h_ = 0, w_ = 0;
  uint64_t words_per_plane_ = 0;
  std::vector<uint64_t> words_;
};

// Ascending flat indices of the set bits of one (t, c) plane.
using EventList = std::vector<uint32_t>;

// Priority-encoder compression: emit the lowest set bit, clear it, repeat.
// The clear-and-rescan loop below is the literal bit-reset semantics; word
// scanning just skips the all-zero stretches.
inline EventList penc_compress(std::span<const uint64_t> words, uint64_t bit_length) {
  EventList events;
  for (size_t wi = 0; wi < words.size(); ++wi) {
    uint64_t word = words[wi];
    while (word != 0) {
      const int bit = std::countr_zero(word);
      const uint64_t index = (static_cast<uint64_t>(wi) << 6) + static_cast<uint64_t>(bit);
      if (index >= bit_length) break;  // padding bits are always zero by invariant
      events.push_back(static_cast<uint32_t>(index));
      word &= word - 1;  // reset the emitted bit
    }
  }
  return events;
}

inline EventList penc_compress(const SpikeTensor& s, uint32_t t, uint32_t c) {
  return penc_compress(s.plane(t, c), s.plane_bits());
}

// Flat plane index -> (row, col).
constexpr std::pair<uint32_t, uint32_t> index_to_coords(uint32_t i, uint32_t w) {
  return {i / w, i % w};
}

// Bernoulli rate coding: bit(t, c, y, x) fires with probability pixel(c, y, x).
// Each bit is an independent keyed SplitMix64 draw on (seed, t, c, index), so
// the tensor is reproducible bit for bit regardless of evaluation order.
inline SpikeTensor rate_encode(const ImageTensor& image, uint32_t timesteps, uint64_t seed) {
  SpikeTensor out(timesteps, image.c, image.h, image.w);
  const uint64_t plane_size = static_cast<uint64_t>(image.h) * image.w;
  for (uint32_t t = 0; t < timesteps; ++t) {
    for (uint32_t c = 0; c < image.c; ++c) {
      for (uint64_t i = 0; i < plane_size; ++i) {
        const float p = image.data[static_cast<size_t>(c) * plane_size + i];
        if (!(p >= 0.0f && p <= 1.0f)) {
          throw ValidationError("rate_encode: pixel value " + std::to_string(p) +
                                " outside [0, 1]");
        }
        const double u = unit_real(keyed_draw(seed, t, c, i));
        if (u < static_cast<double>(p)) out.set(t, c, i, true);
      }
    }
  }
  return out;
}

struct DecodeResult {
  uint32_t class_index = 0;
  bool no_spike = false;  // set when every neuron count is zero
};

// Population decoding: neuron n belongs to class n / pop_per_class; argmax of
// the per-class sums, ties to the lowest class index.
inline DecodeResult pop_decode(std::span<const uint64_t> spike_counts, uint32_t classes,
                               uint32_t pop_per_class) {
  if (spike_counts.size() != static_cast<size_t>(classes) * pop_per_class) {
    throw ValidationError("pop_decode: count vector length " +
                          std::to_string(spike_counts.size()) + " != classes*pop (" +
                          std::to_string(classes) + "*" + std::to_string(pop_per_class) + ")");
  }
  DecodeResult r;
  uint64_t best = 0;
  uint64_t total = 0;
  for (uint32_t c = 0; c < classes; ++c) {
    uint64_t sum = 0;
    for (uint32_t p = 0; p < pop_per_class; ++p) sum += spike_counts[c * pop_per_class + p];
    total += sum;
    if (sum > best) {
      best = sum;
      r.class_index = c;
    }
  }
  r.no_spike = (total == 0);
  return r;
}

// Debug dump: header line "T C H W", then one hex line per (t, c) plane,
// t-major. Bytes are emitted low-address first, bit 0 of each byte being the
// lowest plane index, two lowercase hex digits per byte.
inline void dump_spike_tensor(std::ostream& os, const SpikeTensor& s) {
  os << s.timesteps() << ' ' << s.channels() << ' ' << s.height() << ' ' << s.width() << '\n';
  const uint64_t n_bytes = (s.plane_bits() + 7) / 8;
  static constexpr char kHex[] = "0123456789abcdef";
  for (uint32_t t = 0; t < s.timesteps(); ++t) {
    for (uint32_t c = 0; c < s.channels(); ++c) {
      std::span<const uint64_t> words = s.plane(t, c);
      for (uint64_t b = 0; b < n_bytes; ++b) {
        const uint8_t byte = static_cast<uint8_t>(words[b >> 3] >> ((b & 7) * 8));
        os << kHex[byte >> 4] << kHex[byte & 0xF];
      }
      os << '\n';
    }
  }
}

inline SpikeTensor parse_spike_tensor(std::istream& is) {
  uint32_t t = 0, c = 0, h = 0, w = 0;
  std::string header;
  if (!std::getline(is, header)) throw ParseError("spike dump: missing header line");
  {
    std::istringstream hs(header);
    if (!(hs >> t >> c >> h >> w)) throw ParseError("spike dump: malformed header '" + header + "'");
  }
  SpikeTensor out(t, c, h, w);
  const uint64_t n_bytes = (out.plane_bits() + 7) / 8;
  std::string line;
  for (uint32_t ti = 0; ti < t; ++ti) {
    for (uint32_t ci = 0; ci < c; ++ci) {
      if (!std::getline(is, line)) throw ParseError("spike dump: truncated at plane (" +
                                                    std::to_string(ti) + "," + std::to_string(ci) + ")");
      if (line.size() != 2 * n_bytes) {
        throw ParseError("spike dump: plane line length " + std::to_string(line.size()) +
                         ", expected " + std::to_string(2 * n_bytes));
      }
      for (uint64_t b = 0; b < n_bytes; ++b) {
        auto nibble = [&](char ch) -> uint32_t {
          if (ch >= '0' && ch <= '9') return static_cast<uint32_t>(ch - '0');
          if (ch >= 'a' && ch <= 'f') return static_cast<uint32_t>(ch - 'a' + 10);
          throw ParseError(std::string("spike dump: bad hex digit '") + ch + "'");
        };
        const uint8_t byte = static_cast<uint8_t>((nibble(line[2 * b]) << 4) | nibble(line[2 * b + 1]));
        for (int bit = 0; bit < 8; ++bit) {
          const uint64_t index = b * 8 + static_cast<uint64_t>(bit);
          if (index >= out.plane_bits()) {
            if ((byte >> bit) & 1) throw ParseError("spike dump: set bit beyond plane size");
            continue;
          }
          if ((byte >> bit) & 1) out.set(ti, ci, index, true);
        }
      }
    }
  }
  return out;
}

}  // namespace pulse
