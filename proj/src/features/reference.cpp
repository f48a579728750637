#include "fdst/reference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fdst/image_io.hpp"
#include "json.hpp"

namespace fdst {

namespace fs = std::filesystem;

RawRaster pack_channel_planes(const Image& act) {
  validate(act);
  RawRaster r{act.width, act.height * act.channels, {}};
  r.values.resize(act.data.size());
  for (int c = 0; c < act.channels; ++c) {
    for (int y = 0; y < act.height; ++y) {
      for (int x = 0; x < act.width; ++x) {
        r.values[(static_cast<std::size_t>(c) * act.height + y) * act.width + x] = static_cast<float>(act.at(x, y, c));
      }
    }
  }
  return r;
}

Image unpack_channel_planes(const RawRaster& r, int channels) {
  if (channels < 1 || r.height % channels != 0) throw std::invalid_argument("raster height is not a multiple of the channel count");
  Image act(r.width, r.height / channels, channels);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < act.height; ++y) {
      for (int x = 0; x < act.width; ++x) {
        act.at(x, y, c) = r.values[(static_cast<std::size_t>(c) * act.height + y) * act.width + x];
      }
    }
  }
  return act;
}

namespace {

const char* pool_name(PoolKind k) { return k == PoolKind::max ? "max" : "avg"; }

PoolKind parse_pool(const std::string& s) {
  if (s == "max") return PoolKind::max;
  if (s == "avg") return PoolKind::avg;
  throw std::runtime_error("unknown pool kind '" + s + "' in reference manifest");
}

}  // namespace

void write_reference_activations(const FeatureExtractor& fx, const std::vector<fs::path>& images, const fs::path& out_dir) {
  fs::create_directories(out_dir / "images");
  std::vector<std::string> names;
  std::vector<Image> loaded;
  for (std::size_t i = 0; i < images.size(); ++i) {
    names.push_back("images/img" + std::to_string(i) + ".png");
    save_image(load_image(images[i]), out_dir / names.back());
    loaded.push_back(to_rgb(load_image(out_dir / names.back())));
  }
  nlohmann::json runs = nlohmann::json::array();
  for (PoolKind kind : {PoolKind::max, PoolKind::avg}) {
    const FeatureExtractor run_fx = fx.with_pool_kind(kind);
    fs::create_directories(out_dir / pool_name(kind));
    nlohmann::json imgs = nlohmann::json::array();
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      const FeatureMapStack stack = extract_taps(run_fx, loaded[i]);
      nlohmann::json taps = nlohmann::json::array();
      for (std::size_t t = 0; t < stack.taps.size(); ++t) {
        const Image& act = stack.tap(t);
        const std::string file =
            std::string(pool_name(kind)) + "/img" + std::to_string(i) + "_tap" + std::to_string(stack.taps[t]) + ".fdstd";
        write_fdstd1(pack_channel_planes(act), out_dir / file);
        taps.push_back({{"tap", stack.taps[t]}, {"file", file}, {"width", act.width}, {"height", act.height},
                        {"channels", act.channels}});
      }
      imgs.push_back({{"image", names[i]}, {"taps", taps}});
    }
    runs.push_back({{"pool_kind", pool_name(kind)}, {"images", imgs}});
  }
  std::ofstream out(out_dir / "manifest.json");
  out << nlohmann::json{{"format", kReferenceFormat}, {"runs", runs}}.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write reference manifest in " + out_dir.string());
}

std::vector<ReferenceCheck> compare_reference_activations(const FeatureExtractor& fx, const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing reference manifest in " + dir.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("unreadable reference manifest: ") + e.what());
  }
  if (m.value("format", "") != kReferenceFormat) throw std::runtime_error("unsupported reference manifest format");

  std::vector<ReferenceCheck> checks;
  for (const auto& run : m.at("runs")) {
    const std::string kind_name = run.at("pool_kind").get<std::string>();
    const FeatureExtractor run_fx = fx.with_pool_kind(parse_pool(kind_name));
    for (const auto& entry : run.at("images")) {
      const std::string image = entry.at("image").get<std::string>();
      const FeatureMapStack stack = extract_taps(run_fx, to_rgb(load_image(dir / image)));
      const auto& taps = entry.at("taps");
      if (taps.size() != stack.taps.size()) throw std::runtime_error("reference tap count differs from the extractor's");
      for (std::size_t t = 0; t < taps.size(); ++t) {
        const auto& tap = taps[t];
        if (tap.at("tap").get<int>() != stack.taps[t]) throw std::runtime_error("reference tap indices differ from the extractor's");
        const Image& act = stack.tap(t);
        const int w = tap.at("width").get<int>(), h = tap.at("height").get<int>(), c = tap.at("channels").get<int>();
        if (w != act.width || h != act.height || c != act.channels) {
          throw std::runtime_error("reference shape mismatch for " + image + " tap " + std::to_string(stack.taps[t]));
        }
        const RawRaster raw = read_fdstd1(dir / tap.at("file").get<std::string>());
        if (raw.width != w || raw.height != h * c) throw std::runtime_error("reference raster header disagrees with the manifest");
        const Image ref = unpack_channel_planes(raw, c);
        double worst = 0;
        for (std::size_t i = 0; i < ref.data.size(); ++i) worst = std::max(worst, std::abs(ref.data[i] - act.data[i]));
        checks.push_back({kind_name, image, stack.taps[t], worst});
      }
    }
  }
  return checks;
}

}  // namespace fdst
