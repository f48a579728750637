#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "fdst/cli.hpp"

namespace fdst {

namespace {

nlohmann::json terms_json(const LossTerms& t) {
  return {{"style", t.style},
          {"moment", t.moment},
          {"content", t.content},
          {"total", t.total},
          {"weights",
           {{"alpha", t.weights.alpha},
            {"beta", t.weights.beta},
            {"lambda", t.weights.lambda},
            {"eta", t.weights.eta},
            {"moment_weight", t.weights.moment}}}};
}

LossTerms terms_from_json(const nlohmann::json& j) {
  LossTerms t;
  t.style = j.at("style").get<double>();
  t.moment = j.at("moment").get<double>();
  t.content = j.at("content").get<double>();
  t.total = j.at("total").get<double>();
  const auto& w = j.at("weights");
  t.weights.alpha = w.at("alpha").get<double>();
  t.weights.beta = w.at("beta").get<double>();
  t.weights.lambda = w.at("lambda").get<double>();
  t.weights.eta = w.at("eta").get<double>();
  t.weights.moment = w.at("moment_weight").get<double>();
  return t;
}

bool same_terms(const LossTerms& a, const LossTerms& b) {
  return a.style == b.style && a.moment == b.moment && a.content == b.content && a.total == b.total &&
         a.weights.alpha == b.weights.alpha && a.weights.beta == b.weights.beta &&
         a.weights.lambda == b.weights.lambda && a.weights.eta == b.weights.eta && a.weights.moment == b.weights.moment;
}

}  // namespace

bool RunManifest::operator==(const RunManifest& o) const {
  return command == o.command && config == o.config && extractor == o.extractor && inputs == o.inputs &&
         outputs == o.outputs && stage_seconds == o.stage_seconds && same_terms(final_terms, o.final_terms) &&
         extra == o.extra;
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const ManifestFile& f : m.inputs) inputs.push_back({{"role", f.role}, {"path", f.path}, {"crc32", f.crc32}});
  return {{"command", m.command},
          {"config", to_json(m.config)},
          {"extractor", m.extractor},
          {"inputs", inputs},
          {"outputs", m.outputs},
          {"stage_seconds", m.stage_seconds},
          {"final_loss", terms_json(m.final_terms)},
          {"extra", m.extra}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config = config_from_json(j.at("config"));
    m.extractor = j.at("extractor");
    for (const auto& f : j.at("inputs")) {
      m.inputs.push_back({f.at("role").get<std::string>(), f.at("path").get<std::string>(), f.at("crc32").get<std::string>()});
    }
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.stage_seconds = j.at("stage_seconds").get<std::vector<double>>();
    m.final_terms = terms_from_json(j.at("final_loss"));
    m.extra = j.at("extra");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed run manifest: ") + e.what());
  }
  return m;
}

std::string file_crc32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  uLong crc = crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(got));
  }
  char hex[9];
  std::snprintf(hex, sizeof(hex), "%08lx", static_cast<unsigned long>(crc));
  return hex;
}

}  // namespace fdst
