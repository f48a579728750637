#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fdst/image.hpp"

namespace fdst {

/// Positive per-pixel depths in the canonical frontal view, row-major.
/// Larger values are farther from the viewer.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Throws std::invalid_argument on bad dimensions or non-positive depths.
void validate(const DepthMap& d);

/// FDSTD1: magic "FDSTD1", u32 width, u32 height, f32 row-major values.
DepthMap load_depth(const std::filesystem::path& path);
void save_depth(const DepthMap& d, const std::filesystem::path& path);

DepthMap resize_depth(const DepthMap& d, int width, int height);

/// alpha * d + (1 - alpha) * d_prime after resampling d_prime onto d's grid.
/// alpha = 1 and alpha = 0 return the respective input exactly.
DepthMap fuse_depth(const DepthMap& d, const DepthMap& d_prime, double alpha);

struct Mesh {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<double, 2>> uvs;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

/// Cells whose depth spread exceeds this fraction of the global depth range
/// are left open.
inline constexpr double kDiscontinuityFraction = 0.3;

/// One vertex per depth pixel at (j/(W-1), 1 - i/(H-1), depth) with the same
/// (u, v); two triangles per grid cell except across depth discontinuities.
Mesh depth_to_mesh(const DepthMap& d, const Image& texture, double discontinuity = kDiscontinuityFraction);

/// Writes basepath.obj, basepath.mtl and basepath.png.
void export_obj(const Mesh& mesh, const Image& texture, const std::filesystem::path& basepath);

/// Reads the v / vt / f records of an OBJ written by export_obj.
Mesh parse_obj(const std::filesystem::path& path);

/// Orthographic preview: yaw (degrees, |yaw| <= 90) about the vertical axis
/// through the vertex centroid, z-buffer, two-sided Lambertian shading under
/// a frontal light, black background. The output has the texture's size.
Image render_preview(const Mesh& mesh, const Image& texture, double yaw_degrees);

}  // namespace fdst
