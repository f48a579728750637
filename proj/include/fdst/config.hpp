#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdst/losses.hpp"
#include "json.hpp"

namespace fdst {

/// Complete recipe for one coarse-to-fine transfer run.
struct TransferConfig {
  std::vector<int> resolutions{64, 128, 256, 512};
  int iterations_per_resolution = 200;
  LossWeights weights;
  int sample_count = 1024;
  double learning_rate = 2e-3;
  double rmsprop_decay = 0.99;
  double rmsprop_eps = 1e-8;
  std::uint64_t seed = 0;
  int pyramid_levels = 5;
  std::string task = "transfer";
  double feather = 0.02;  // region feather radius as a fraction of the image diagonal

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  bool operator==(const TransferConfig&) const = default;
};

nlohmann::json to_json(const TransferConfig& cfg);

/// Overlays the keys present in `j` onto `base`. Accepts either a bare
/// config object or a run manifest carrying it under "config".
TransferConfig config_from_json(const nlohmann::json& j, TransferConfig base = {});

}  // namespace fdst
