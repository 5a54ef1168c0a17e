#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pulse/errors.hpp"
#include "pulse/image.hpp"
#include "pulse/model.hpp"

namespace pulse {

inline constexpr int kManifestFormatVersion = 1;

struct Model {
  NetworkSpec spec;
  Weights weights;
  HardwareConfig hw;
};

namespace detail {

inline std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, const void* data, size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

inline int32_t le32_at(const uint8_t* p) {
  const uint32_t u = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                     (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
  return static_cast<int32_t>(u);
}

inline void le32_put(uint8_t* p, int32_t v) {
  const uint32_t u = static_cast<uint32_t>(v);
  p[0] = static_cast<uint8_t>(u);
  p[1] = static_cast<uint8_t>(u >> 8);
  p[2] = static_cast<uint8_t>(u >> 16);
  p[3] = static_cast<uint8_t>(u >> 24);
}

}  // namespace detail

inline std::string load_text_file(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = detail::read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

inline void save_text_file(const std::filesystem::path& path, std::string_view text) {
  detail::write_file_bytes(path, text.data(), text.size());
}

// Flat little-endian int32 blob of raw Q3.29 words.
inline std::vector<Fx32> load_fx_blob(const std::filesystem::path& path, uint64_t expected_count,
                                      const std::string& what) {
  const std::vector<uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.size() != expected_count * 4) {
    throw ValidationError(what + ": blob '" + path.string() + "' holds " +
                          std::to_string(bytes.size() / 4) + " values (" +
                          std::to_string(bytes.size()) + " bytes), expected " +
                          std::to_string(expected_count));
  }
  std::vector<Fx32> out(expected_count);
  for (uint64_t i = 0; i < expected_count; ++i) out[i].raw = detail::le32_at(&bytes[i * 4]);
  return out;
}

inline void save_fx_blob(const std::filesystem::path& path, const std::vector<Fx32>& values) {
  std::vector<uint8_t> bytes(values.size() * 4);
  for (size_t i = 0; i < values.size(); ++i) detail::le32_put(&bytes[i * 4], values[i].raw);
  detail::write_file_bytes(path, bytes.data(), bytes.size());
}

// Flat little-endian float32 [C][H][W] intensity tensor; dims come from the
// manifest, so only the byte count is checked here. Value range is enforced
// at encode time.
inline ImageTensor load_image(const std::filesystem::path& path, uint32_t c, uint32_t h,
                              uint32_t w) {
  const std::vector<uint8_t> bytes = detail::read_file_bytes(path);
  const uint64_t expected = static_cast<uint64_t>(c) * h * w;
  if (bytes.size() != expected * 4) {
    throw ValidationError("image '" + path.string() + "' holds " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(expected * 4) + " for " +
                          std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w));
  }
  ImageTensor img(c, h, w);
  for (uint64_t i = 0; i < expected; ++i) {
    uint32_t u = static_cast<uint32_t>(detail::le32_at(&bytes[i * 4]));
    float f;
    static_assert(sizeof(f) == sizeof(u));
    std::memcpy(&f, &u, sizeof(f));
    img.data[i] = f;
  }
  return img;
}

inline void save_image(const std::filesystem::path& path, const ImageTensor& img) {
  std::vector<uint8_t> bytes(img.data.size() * 4);
  for (size_t i = 0; i < img.data.size(); ++i) {
    uint32_t u;
    std::memcpy(&u, &img.data[i], sizeof(u));
    detail::le32_put(&bytes[i * 4], static_cast<int32_t>(u));
  }
  detail::write_file_bytes(path, bytes.data(), bytes.size());
}

// Manifest: one JSON document naming the topology, LIF/coding parameters,
// per-layer hardware entries and weight blob paths (relative paths resolve
// against the manifest's directory).
inline Model load_manifest(const std::filesystem::path& manifest_path) {
  if (!std::filesystem::exists(manifest_path)) {
    throw IoError("manifest '" + manifest_path.string() + "' does not exist");
  }
  nlohmann::json doc;
  {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest '" + manifest_path.string() + "'");
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("manifest '" + manifest_path.string() + "': " + e.what());
    }
  }
  const std::filesystem::path base = manifest_path.parent_path();

  Model model;
  try {
    const std::string topology = doc.at("topology").get<std::string>();
    const uint32_t pop = doc.value("pop_per_class", 1u);
    model.spec = parse_topology(topology, pop);
    model.spec.timesteps = doc.at("timesteps").get<uint32_t>();
    model.spec.beta = encode(std::stod(doc.at("beta").get<std::string>()));
    if (doc.contains("classes")) {
      const uint32_t classes = doc.at("classes").get<uint32_t>();
      if (model.spec.classes != 0 && classes != model.spec.classes) {
        throw ValidationError("manifest: classes " + std::to_string(classes) +
                              " conflicts with topology trailing token " +
                              std::to_string(model.spec.classes));
      }
      model.spec.classes = classes;
    }

    model.hw.clock_mhz = doc.value("clock_mhz", 125.0);
    model.hw.penc_width = doc.value("penc_width", 32u);
    model.hw.pipeline_fill = doc.value("pipeline_fill", 4u);

    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.size() != model.spec.layers.size()) {
      throw ValidationError("manifest: 'layers' must list one entry per topology layer (" +
                            std::to_string(model.spec.layers.size()) + ")");
    }

    model.hw.layers.resize(model.spec.layers.size());
    model.weights.layers.resize(model.spec.layers.size());
    for (size_t i = 0; i < model.spec.layers.size(); ++i) {
      const auto& entry = layers[i];
      model.hw.layers[i].nc_count = entry.value("nc_count", 1u);
      model.hw.layers[i].chunk_count = entry.value("chunk_count", 1u);
      if (auto* conv = std::get_if<ConvSpec>(&model.spec.layers[i]); conv && entry.contains("padding")) {
        conv->padding = padding_from_string(entry.at("padding").get<std::string>());
      }
    }

    // Padding overrides change downstream dims; re-resolve before sizing blobs.
    resolve_shapes(model.spec);

    for (size_t i = 0; i < model.spec.layers.size(); ++i) {
      if (!is_compute(model.spec.layers[i])) continue;
      const auto& entry = layers[i];
      const std::string wf = entry.at("weights_file").get<std::string>();
      const std::string bf = entry.at("bias_file").get<std::string>();
      const std::string what = "layer " + std::to_string(i);
      model.weights.layers[i].w =
          load_fx_blob(base / wf, expected_weight_count(model.spec.layers[i]), what);
      model.weights.layers[i].bias =
          load_fx_blob(base / bf, expected_bias_count(model.spec.layers[i]), what);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest '" + manifest_path.string() + "': " + e.what());
  }

  validate_network(model.spec);
  validate_hardware(model.spec, model.hw);
  validate_weights(model.spec, model.weights);
  return model;
}

// Writes manifest.json plus one weight/bias blob pair per compute layer into
// the manifest's directory. beta is rendered as a decimal string from its raw
// word so that save(load(m)) round-trips exactly.
inline void save_manifest(const Model& model, const std::filesystem::path& manifest_path,
                          const std::string& beta_string = "") {
  const std::filesystem::path base = manifest_path.parent_path();
  nlohmann::json doc;
  doc["format_version"] = kManifestFormatVersion;
  doc["topology"] = render_topology(model.spec);
  doc["timesteps"] = model.spec.timesteps;
  char beta_buf[32];
  std::snprintf(beta_buf, sizeof(beta_buf), "%.17g", to_double(model.spec.beta));
  doc["beta"] = beta_string.empty() ? std::string(beta_buf) : beta_string;
  doc["pop_per_class"] = model.spec.pop_per_class;
  doc["classes"] = model.spec.classes;
  doc["clock_mhz"] = model.hw.clock_mhz;
  doc["penc_width"] = model.hw.penc_width;
  doc["pipeline_fill"] = model.hw.pipeline_fill;

  nlohmann::json layer_array = nlohmann::json::array();
  for (size_t i = 0; i < model.spec.layers.size(); ++i) {
    nlohmann::json entry = nlohmann::json::object();
    if (const auto* conv = std::get_if<ConvSpec>(&model.spec.layers[i])) {
      entry["padding"] = to_string(conv->padding);
    }
    if (is_compute(model.spec.layers[i])) {
      entry["nc_count"] = model.hw.layers[i].nc_count;
      entry["chunk_count"] = model.hw.layers[i].chunk_count;
      const std::string wf = "layer" + std::to_string(i) + "_w.bin";
      const std::string bf = "layer" + std::to_string(i) + "_b.bin";
      entry["weights_file"] = wf;
      entry["bias_file"] = bf;
      save_fx_blob(base / wf, model.weights.layers[i].w);
      save_fx_blob(base / bf, model.weights.layers[i].bias);
    }
    layer_array.push_back(entry);
  }
  doc["layers"] = layer_array;

  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw IoError("cannot open manifest '" + manifest_path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failure on '" + manifest_path.string() + "'");
}

}  // namespace pulse
