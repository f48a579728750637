#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace fdst {

/// Dense raster of reals, row-major with interleaved channels. Pixel values
/// nominally lie in [0, 1]; intermediate results (gradients, pyramid bands)
/// reuse the type without that range.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

/// Throws std::invalid_argument unless the dimensions are positive and the
/// data length matches.
void validate(const Image& img);

/// Bilinear resampling with the align-corners convention: output sample x
/// maps to source position x * (W_in - 1) / (W_out - 1).
Image resize_bilinear(const Image& img, int width, int height);

/// Adjoint of resize_bilinear: maps a gradient on the resized raster back onto
/// a raster of the source dimensions.
Image resize_bilinear_adjoint(const Image& grad, int src_width, int src_height);

/// Dimensions after matching the long side to `long_side`, preserving aspect.
std::array<int, 2> fit_long_side(int width, int height, int long_side);

/// 0.299 R + 0.587 G + 0.114 B; single-channel inputs are returned unchanged.
Image to_luma(const Image& img);

/// Replicates a single-channel image into three channels; 3-channel inputs
/// are returned unchanged.
Image to_rgb(const Image& img);

std::array<double, 3> mean_color(const Image& rgb);

Image clamp01(Image img);

}  // namespace fdst
