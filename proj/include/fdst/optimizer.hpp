#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fdst/config.hpp"
#include "fdst/feature_set.hpp"
#include "fdst/features.hpp"
#include "fdst/losses.hpp"
#include "fdst/pyramid.hpp"
#include "fdst/region.hpp"

namespace fdst {

using Rng = std::mt19937_64;

/// RMSprop second-moment accumulators, one raster per pyramid level.
struct OptimizerState {
  std::vector<Image> v;
  long iteration = 0;
};

/// v <- rho v + (1 - rho) g^2; p <- p - lr g / (sqrt(v) + eps), elementwise.
void rmsprop_step(std::span<double> params, std::span<const double> grads, std::span<double> v, double lr,
                  double rho, double eps);

/// Applies rmsprop_step to every level, allocating zeroed accumulators on
/// first use.
void rmsprop_step(LaplacianPyramid& params, const LaplacianPyramid& grads, OptimizerState& state, double lr,
                  double rho, double eps);

/// n distinct integer pixel coordinates drawn uniformly without replacement
/// from the mask support (the whole frame when mask is null).
std::vector<PixelCoord> sample_coords(Rng& rng, int width, int height, int n, const Mask* mask = nullptr);

struct LossLogEntry {
  int stage = 0;
  int iteration = 0;
  int resolution = 0;
  LossTerms terms;
};

/// Per-stage source images and masks, resized to the stage resolution.
struct StageInputs {
  Image content;
  Image ss_style;
  Image cd_style;
  std::vector<RegionSpec> regions;  // masks at the original image sizes
};

struct StageResult {
  std::vector<LossLogEntry> log;
  double seconds = 0;
};

/// One resolution of the schedule: `iterations` RMSprop updates of the
/// pyramid entries against the texture objective.
StageResult run_stage(int stage, int resolution, const StageInputs& inputs, LaplacianPyramid& pyr,
                      const FeatureExtractor& fx, const TransferConfig& cfg, OptimizerState& state, Rng& rng);

/// Coarse-stage starting image: the content at the first resolution shifted
/// by the difference of mean colors (CD style minus content).
Image initialize_output(const Image& content, const Image& cd_style, const TransferConfig& cfg);

struct ScheduleResult {
  Image output;  // clamped to [0, 1]
  Image unclamped;
  std::vector<LossLogEntry> log;
  std::vector<double> stage_seconds;
};

ScheduleResult run_schedule(const Image& content, const Image& ss_style, const Image& cd_style,
                            const FeatureExtractor& fx, const TransferConfig& cfg,
                            const std::vector<RegionSpec>& regions = {});

/// iteration,resolution,style,content,moment,total
void write_loss_csv(const std::vector<LossLogEntry>& log, const std::filesystem::path& path);

}  // namespace fdst
