#include "fdst/region.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fdst {

std::size_t Mask::support() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

Mask mask_from_image(const Image& img, int width, int height) {
  const Image gray = resize_bilinear(to_luma(img), width, height);
  Mask m{width, height, std::vector<std::uint8_t>(gray.data.size())};
  for (std::size_t i = 0; i < gray.data.size(); ++i) m.bits[i] = gray.data[i] >= 0.5 ? 1 : 0;
  return m;
}

Mask full_mask(int width, int height) {
  return Mask{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 1)};
}

namespace {

// Separable square min filter with replicated borders.
std::vector<double> erode(const std::vector<double>& v, int W, int H, int r) {
  std::vector<double> tmp(v.size()), out(v.size());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double m = 1.0;
      for (int k = std::max(0, x - r); k <= std::min(W - 1, x + r); ++k) m = std::min(m, v[y * W + k]);
      tmp[y * W + x] = m;
    }
  }
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double m = 1.0;
      for (int k = std::max(0, y - r); k <= std::min(H - 1, y + r); ++k) m = std::min(m, tmp[k * W + x]);
      out[y * W + x] = m;
    }
  }
  return out;
}

// Separable truncated Gaussian; weights are renormalized over the in-image
// part of the window so a full mask stays full at the borders.
std::vector<double> blur(const std::vector<double>& v, int W, int H, int r) {
  const double sigma = r / 3.0;
  std::vector<double> kernel(2 * r + 1);
  for (int k = -r; k <= r; ++k) kernel[k + r] = std::exp(-0.5 * k * k / (sigma * sigma));
  std::vector<double> tmp(v.size()), out(v.size());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double s = 0, ws = 0;
      for (int k = std::max(0, x - r); k <= std::min(W - 1, x + r); ++k) {
        s += kernel[k - x + r] * v[y * W + k];
        ws += kernel[k - x + r];
      }
      tmp[y * W + x] = s / ws;
    }
  }
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double s = 0, ws = 0;
      for (int k = std::max(0, y - r); k <= std::min(H - 1, y + r); ++k) {
        s += kernel[k - y + r] * tmp[k * W + x];
        ws += kernel[k - y + r];
      }
      out[y * W + x] = s / ws;
    }
  }
  return out;
}

}  // namespace

Image feather_mask(const Mask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("feather radius must be non-negative");
  const int W = mask.width, H = mask.height;
  std::vector<double> v(mask.bits.begin(), mask.bits.end());
  if (radius > 0) v = blur(erode(v, W, H, radius), W, H, radius);
  Image out(W, H, 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = v[i];
    out.data[i] = m >= 1.0 - 1e-12 ? 1.0 : m <= 1e-12 ? 0.0 : m;
  }
  return out;
}

int feather_radius(int width, int height, double fraction) {
  if (fraction <= 0) return 0;
  return static_cast<int>(std::lround(fraction * std::hypot(width, height)));
}

Image apply_region_composite(const Image& stylized, const Image& content, const std::vector<RegionSpec>& regions,
                             double feather_fraction) {
  validate(stylized);
  validate(content);
  if (!stylized.same_shape(content)) throw std::invalid_argument("stylized and content images differ in shape");
  const int W = content.width, H = content.height;
  const int radius = feather_radius(W, H, feather_fraction);

  Image m(W, H, 1, 0.0);
  for (const RegionSpec& r : regions) {
    validate(r.content_mask);
    if (r.content_mask.width != W || r.content_mask.height != H) {
      throw std::invalid_argument("region mask dimensions do not match the image");
    }
    if (!(r.weight > 0)) continue;
    const Image f = feather_mask(mask_from_image(r.content_mask, W, H), radius);
    for (std::size_t i = 0; i < f.data.size(); ++i) m.data[i] = std::max(m.data[i], f.data[i]);
  }

  Image out = content;
  const int C = content.channels;
  for (std::size_t p = 0; p < content.pixel_count(); ++p) {
    const double a = m.data[p];
    if (a == 0.0) continue;
    for (int c = 0; c < C; ++c) {
      const std::size_t i = p * C + c;
      out.data[i] = a == 1.0 ? stylized.data[i] : a * stylized.data[i] + (1.0 - a) * content.data[i];
    }
  }
  return out;
}

}  // namespace fdst
