#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "fdst/features.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little, "FDSTW1 I/O assumes a little-endian host");

namespace fdst {

namespace {

constexpr char kMagic[6] = {'F', 'D', 'S', 'T', 'W', '1'};

class Reader {
 public:
  Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open weight file " + path.string());
  }
  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw std::runtime_error("truncated weight file " + path_.string());
    }
  }
  template <typename T>
  T value() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::relu: return "relu";
    case LayerKind::pool2x2: return "pool2x2";
  }
  return "?";
}

std::vector<std::uint32_t> layer_dims(const Layer& layer) {
  if (layer.kind != LayerKind::conv3x3) return {};
  return {static_cast<std::uint32_t>(layer.out_channels), static_cast<std::uint32_t>(layer.in_channels), 3u, 3u};
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void verify_manifest(const std::filesystem::path& mpath, const std::vector<Layer>& layers) {
  std::ifstream in(mpath);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed weight manifest " + mpath.string() + ": " + e.what());
  }
  const auto& entries = m.at("layers");
  if (entries.size() != layers.size()) throw std::runtime_error("manifest layer count does not match weight file");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& e = entries[l];
    if (e.at("name").get<std::string>() != layers[l].name) {
      throw std::runtime_error("manifest name mismatch at layer " + std::to_string(l));
    }
    if (e.at("shape").get<std::vector<std::uint32_t>>() != layer_dims(layers[l])) {
      throw std::runtime_error("manifest shape mismatch for " + layers[l].name);
    }
    if (e.contains("crc32") && e.at("crc32").get<std::string>() != hex32(payload_crc32(layers[l]))) {
      throw std::runtime_error("payload checksum mismatch for " + layers[l].name);
    }
  }
}

}  // namespace

std::uint32_t payload_crc32(const Layer& layer) {
  uLong crc = crc32(0L, Z_NULL, 0);
  auto feed = [&crc](const std::vector<float>& v) {
    if (!v.empty()) crc = crc32(crc, reinterpret_cast<const Bytef*>(v.data()), static_cast<uInt>(v.size() * sizeof(float)));
  };
  feed(layer.weights);
  feed(layer.bias);
  return static_cast<std::uint32_t>(crc);
}

FeatureExtractor load_weights(const std::filesystem::path& path) {
  Reader r(path);
  char magic[6];
  r.bytes(magic, 6);
  if (std::memcmp(magic, kMagic, 6) != 0) throw std::runtime_error("bad magic in weight file " + path.string());

  const auto pool_byte = r.value<std::uint8_t>();
  if (pool_byte > 1) throw std::runtime_error("unknown pool kind " + std::to_string(pool_byte));
  const auto layer_count = r.value<std::uint32_t>();
  std::array<double, 3> mean{}, scale{};
  for (double& v : mean) v = r.value<float>();
  for (double& v : scale) v = r.value<float>();
  const auto tap_count = r.value<std::uint32_t>();
  if (tap_count > layer_count + 1) throw std::runtime_error("tap count exceeds layer count");
  std::vector<int> taps(tap_count);
  for (int& t : taps) t = static_cast<int>(r.value<std::uint32_t>());

  std::vector<Layer> layers;
  layers.reserve(layer_count);
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    Layer layer;
    const auto kind = r.value<std::uint8_t>();
    if (kind > 2) throw std::runtime_error("unknown layer kind " + std::to_string(kind) + " at layer " + std::to_string(l));
    layer.kind = static_cast<LayerKind>(kind);
    const auto name_len = r.value<std::uint32_t>();
    if (name_len > 4096) throw std::runtime_error("implausible layer name length");
    layer.name.resize(name_len);
    r.bytes(layer.name.data(), name_len);
    const auto ndims = r.value<std::uint32_t>();
    if (ndims > 8) throw std::runtime_error("implausible dimension count for " + layer.name);
    std::vector<std::uint32_t> dims(ndims);
    for (auto& d : dims) d = r.value<std::uint32_t>();
    if (layer.kind == LayerKind::conv3x3) {
      if (ndims != 4 || dims[2] != 3 || dims[3] != 3 || dims[0] == 0 || dims[1] == 0) {
        throw std::runtime_error("conv layer " + layer.name + " must have shape [out, in, 3, 3]");
      }
      if (static_cast<std::uint64_t>(dims[0]) * dims[1] > (1u << 24)) {
        throw std::runtime_error("implausible conv shape for " + layer.name);
      }
      layer.out_channels = static_cast<int>(dims[0]);
      layer.in_channels = static_cast<int>(dims[1]);
      layer.weights.resize(static_cast<std::size_t>(dims[0]) * dims[1] * 9);
      layer.bias.resize(dims[0]);
      r.bytes(layer.weights.data(), layer.weights.size() * sizeof(float));
      r.bytes(layer.bias.data(), layer.bias.size() * sizeof(float));
    } else if (ndims != 0) {
      throw std::runtime_error(std::string(kind_name(layer.kind)) + " layer " + layer.name + " must not carry a payload");
    }
    layers.push_back(std::move(layer));
  }
  if (!r.at_end()) throw std::runtime_error("trailing bytes after last layer in " + path.string());

  const auto mpath = manifest_path(path);
  if (std::filesystem::exists(mpath)) verify_manifest(mpath, layers);

  try {
    return FeatureExtractor(std::move(layers), mean, scale, std::move(taps), static_cast<PoolKind>(pool_byte));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("inconsistent weight file: ") + e.what());
  }
}

void save_weights(const FeatureExtractor& fx, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weight file " + path.string());
  out.write(kMagic, 6);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(fx.pool_kind()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(fx.layers().size()));
  for (double v : fx.mean()) put<float>(out, static_cast<float>(v));
  for (double v : fx.scale()) put<float>(out, static_cast<float>(v));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(fx.taps().size()));
  for (int t : fx.taps()) put<std::uint32_t>(out, static_cast<std::uint32_t>(t));

  nlohmann::json manifest;
  manifest["format"] = "FDSTW1";
  manifest["pool_kind"] = fx.pool_kind() == PoolKind::avg ? "avg" : "max";
  manifest["taps"] = fx.taps();
  manifest["mean"] = fx.mean();
  manifest["scale"] = fx.scale();
  manifest["layers"] = nlohmann::json::array();
  for (const Layer& layer : fx.layers()) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(layer.kind));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(layer.name.size()));
    out.write(layer.name.data(), static_cast<std::streamsize>(layer.name.size()));
    const auto dims = layer_dims(layer);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) put<std::uint32_t>(out, d);
    if (layer.kind == LayerKind::conv3x3) {
      out.write(reinterpret_cast<const char*>(layer.weights.data()),
                static_cast<std::streamsize>(layer.weights.size() * sizeof(float)));
      out.write(reinterpret_cast<const char*>(layer.bias.data()),
                static_cast<std::streamsize>(layer.bias.size() * sizeof(float)));
    }
    nlohmann::json entry{{"name", layer.name}, {"kind", kind_name(layer.kind)}, {"shape", dims}};
    if (layer.kind == LayerKind::conv3x3) entry["crc32"] = hex32(payload_crc32(layer));
    manifest["layers"].push_back(std::move(entry));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
  out.close();

  std::ofstream mout(manifest_path(path));
  if (!mout) throw std::runtime_error("cannot write manifest for " + path.string());
  mout << manifest.dump(2) << '\n';
}

}  // namespace fdst
