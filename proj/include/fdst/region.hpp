#pragma once

#include <cstdint>
#include <vector>

#include "fdst/image.hpp"

namespace fdst {

/// Binary pixel mask, row-major.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool test(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t support() const;
};

/// Bilinearly resizes a single-channel (or luma of an RGB) image to the given
/// size and thresholds at 0.5.
Mask mask_from_image(const Image& img, int width, int height);

Mask full_mask(int width, int height);

/// Soft mask in [0, 1] whose support lies inside `mask`: the mask is eroded
/// by `radius` pixels and then blurred with a Gaussian (sigma = radius / 3)
/// truncated at `radius`. Image borders behave as if the mask continued.
/// radius 0 returns the hard mask.
Image feather_mask(const Mask& mask, int radius);

/// One guided region: where to sample on the content/output, where to sample
/// on the CD style image, and the region's style weight.
struct RegionSpec {
  Image content_mask;
  Image style_mask;
  double weight = 1.0;
};

/// Feather radius in pixels for a fraction of the image diagonal.
int feather_radius(int width, int height, double fraction);

/// out = m * stylized + (1 - m) * content where m is the pointwise maximum of
/// the feathered masks of regions with positive weight. Pixels with m = 0
/// are copied from content unchanged.
Image apply_region_composite(const Image& stylized, const Image& content, const std::vector<RegionSpec>& regions,
                             double feather_fraction);

}  // namespace fdst
