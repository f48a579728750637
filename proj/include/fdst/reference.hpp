#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fdst/features.hpp"
#include "fdst/raster_io.hpp"

namespace fdst {

// Reference activation directory layout:
//
//   manifest.json
//     { "format": "fdst-reference/1",
//       "weights": "<FDSTW1 path, optional, relative to the directory>",
//       "runs": [ { "pool_kind": "max" | "avg",
//                   "images": [ { "image": "<png>",
//                                 "taps": [ { "tap": t, "file": "<fdstd>",
//                                             "width": W, "height": H,
//                                             "channels": C } ] } ] } ] }
//
// Each tap file is an FDSTD1 raster of width W and height H * C holding the
// channel planes one after another: value (x, c * H + y) = activation(x, y, c).

inline constexpr const char* kReferenceFormat = "fdst-reference/1";

/// Packs an HWC activation into the stacked-plane raster layout.
RawRaster pack_channel_planes(const Image& act);
/// Inverse of pack_channel_planes.
Image unpack_channel_planes(const RawRaster& r, int channels);

/// Writes tap activations of `fx` for each image under both pool kinds, in
/// the layout above. Images are re-encoded as PNG inside `out_dir`.
void write_reference_activations(const FeatureExtractor& fx, const std::vector<std::filesystem::path>& images,
                                 const std::filesystem::path& out_dir);

struct ReferenceCheck {
  std::string pool_kind;
  std::string image;
  int tap = 0;
  double max_abs_diff = 0;
};

/// Runs `fx` (switched to each run's pool kind) on the manifest images and
/// reports the max abs deviation per tap. Throws on missing files, tap-set
/// disagreement or shape mismatch.
std::vector<ReferenceCheck> compare_reference_activations(const FeatureExtractor& fx,
                                                          const std::filesystem::path& dir);

}  // namespace fdst
