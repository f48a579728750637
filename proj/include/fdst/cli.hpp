#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fdst/config.hpp"
#include "fdst/losses.hpp"
#include "json.hpp"

namespace fdst {

struct ManifestFile {
  std::string role;
  std::string path;
  std::string crc32;  // 8 lowercase hex digits of the file bytes

  bool operator==(const ManifestFile&) const = default;
};

/// Record of one command invocation, written as manifest.json.
struct RunManifest {
  std::string command;
  TransferConfig config;
  nlohmann::json extractor;  // {"weights": path, "crc32": ...} or the built-in recipe
  std::vector<ManifestFile> inputs;
  std::vector<std::string> outputs;
  std::vector<double> stage_seconds;
  LossTerms final_terms;
  nlohmann::json extra;  // command-specific parameters (geometry alpha, regions, ...)

  bool operator==(const RunManifest& o) const;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

/// CRC-32 (zlib) of a file's bytes, as 8 lowercase hex digits.
std::string file_crc32(const std::filesystem::path& path);

/// Entry point of the fdst tool. Returns 0 on success, 2 on usage errors and
/// 1 on runtime failures; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fdst
