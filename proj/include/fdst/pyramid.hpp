#pragma once

#include <vector>

#include "fdst/image.hpp"

namespace fdst {

/// Band-pass decomposition. levels[0] is the finest band at the base
/// resolution; levels[L] has dimensions ceil(W / 2^L) x ceil(H / 2^L); the
/// last entry is the low-pass residual.
struct LaplacianPyramid {
  std::vector<Image> levels;
  int base_width = 0;
  int base_height = 0;

  int level_count() const { return static_cast<int>(levels.size()); }
};

/// Largest level count accepted by decompose_laplacian for the given size.
int max_pyramid_levels(int width, int height);

/// 5-tap binomial (1,4,6,4,1)/16 blur with reflect padding followed by
/// keeping even rows and columns.
Image blur_downsample(const Image& img);

/// Linear upsampling where fine pixel x samples coarse position x / 2.
Image upsample2(const Image& coarse, int width, int height);
Image upsample2_adjoint(const Image& grad, int coarse_width, int coarse_height);

LaplacianPyramid decompose_laplacian(const Image& img, int levels);

/// Recursive upsample-and-add. Linear in the pyramid entries.
Image synthesize_from_pyramid(const LaplacianPyramid& pyr);

/// Gradient of a scalar with respect to every pyramid entry, given its
/// gradient with respect to the synthesized image.
LaplacianPyramid synthesize_adjoint(const Image& grad, const LaplacianPyramid& shape);

}  // namespace fdst
