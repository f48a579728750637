#pragma once

#include <filesystem>
#include <vector>

namespace fdst {

/// Single-plane f32 raster as stored in an FDSTD1 file: magic "FDSTD1",
/// u32 width, u32 height, width * height little-endian f32 values.
struct RawRaster {
  int width = 0;
  int height = 0;
  std::vector<float> values;
};

RawRaster read_fdstd1(const std::filesystem::path& path);
void write_fdstd1(const RawRaster& r, const std::filesystem::path& path);

}  // namespace fdst
