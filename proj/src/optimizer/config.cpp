#include "fdst/config.hpp"

#include <stdexcept>

namespace fdst {

void TransferConfig::validate() const {
  if (resolutions.empty()) throw std::invalid_argument("at least one resolution is required");
  for (std::size_t i = 0; i < resolutions.size(); ++i) {
    if (resolutions[i] < 1) throw std::invalid_argument("resolutions must be positive");
    if (i > 0 && resolutions[i] <= resolutions[i - 1]) throw std::invalid_argument("resolutions must be strictly increasing");
  }
  if (iterations_per_resolution < 0) throw std::invalid_argument("iterations must be non-negative");
  const LossWeights& w = weights;
  if (w.alpha < 0 || w.beta < 0 || w.lambda < 0 || w.eta < 0 || w.moment < 0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  if (sample_count < 2) throw std::invalid_argument("sample count must be at least 2");
  if (!(learning_rate >= 0)) throw std::invalid_argument("learning rate must be non-negative");
  if (!(rmsprop_decay > 0 && rmsprop_decay < 1)) throw std::invalid_argument("rmsprop decay must lie in (0, 1)");
  if (!(rmsprop_eps > 0)) throw std::invalid_argument("rmsprop epsilon must be positive");
  if (pyramid_levels < 1) throw std::invalid_argument("pyramid needs at least one level");
  if (!(feather >= 0)) throw std::invalid_argument("feather must be non-negative");
}

nlohmann::json to_json(const TransferConfig& cfg) {
  return {
      {"resolutions", cfg.resolutions},
      {"iterations_per_resolution", cfg.iterations_per_resolution},
      {"alpha", cfg.weights.alpha},
      {"beta", cfg.weights.beta},
      {"lambda", cfg.weights.lambda},
      {"eta", cfg.weights.eta},
      {"moment_weight", cfg.weights.moment},
      {"sample_count", cfg.sample_count},
      {"learning_rate", cfg.learning_rate},
      {"rmsprop_decay", cfg.rmsprop_decay},
      {"rmsprop_eps", cfg.rmsprop_eps},
      {"seed", cfg.seed},
      {"pyramid_levels", cfg.pyramid_levels},
      {"task", cfg.task},
      {"feather", cfg.feather},
  };
}

TransferConfig config_from_json(const nlohmann::json& j, TransferConfig base) {
  const nlohmann::json& src = j.contains("config") ? j.at("config") : j;
  if (!src.is_object()) throw std::invalid_argument("config must be a JSON object");
  auto take = [&](const char* key, auto& field) {
    if (src.contains(key)) field = src.at(key).get<std::decay_t<decltype(field)>>();
  };
  try {
    take("resolutions", base.resolutions);
    take("iterations_per_resolution", base.iterations_per_resolution);
    take("alpha", base.weights.alpha);
    take("beta", base.weights.beta);
    take("lambda", base.weights.lambda);
    take("eta", base.weights.eta);
    take("moment_weight", base.weights.moment);
    take("sample_count", base.sample_count);
    take("learning_rate", base.learning_rate);
    take("rmsprop_decay", base.rmsprop_decay);
    take("rmsprop_eps", base.rmsprop_eps);
    take("seed", base.seed);
    take("pyramid_levels", base.pyramid_levels);
    take("task", base.task);
    take("feather", base.feather);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  return base;
}

}  // namespace fdst
