#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fdst/geometry.hpp"
#include "fdst/raster_io.hpp"

namespace fdst {

void validate(const DepthMap& d) {
  if (d.width <= 0 || d.height <= 0) throw std::invalid_argument("depth map has zero dimension");
  if (d.values.size() != static_cast<std::size_t>(d.width) * d.height) {
    throw std::invalid_argument("depth map value count does not match its dimensions");
  }
  for (double v : d.values) {
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("depth values must be positive and finite");
  }
}

DepthMap load_depth(const std::filesystem::path& path) {
  RawRaster r = read_fdstd1(path);
  return DepthMap{r.width, r.height, std::vector<double>(r.values.begin(), r.values.end())};
}

void save_depth(const DepthMap& d, const std::filesystem::path& path) {
  if (d.values.size() != static_cast<std::size_t>(d.width) * d.height || d.width <= 0 || d.height <= 0) {
    throw std::invalid_argument("save_depth: malformed depth map");
  }
  write_fdstd1(RawRaster{d.width, d.height, std::vector<float>(d.values.begin(), d.values.end())}, path);
}

DepthMap resize_depth(const DepthMap& d, int width, int height) {
  Image img(d.width, d.height, 1);
  img.data = d.values;
  Image r = resize_bilinear(img, width, height);
  return DepthMap{width, height, std::move(r.data)};
}

DepthMap fuse_depth(const DepthMap& d, const DepthMap& d_prime, double alpha) {
  validate(d);
  validate(d_prime);
  if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("fusion alpha must lie in [0, 1]");
  const DepthMap other =
      (d_prime.width == d.width && d_prime.height == d.height) ? d_prime : resize_depth(d_prime, d.width, d.height);
  if (alpha == 1.0) return d;
  if (alpha == 0.0) return other;
  DepthMap out = d;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double a = d.values[i], b = other.values[i];
    // b + alpha (a - b) is exact when a == b; the clamp keeps rounding inside the hull.
    out.values[i] = std::clamp(b + alpha * (a - b), std::min(a, b), std::max(a, b));
  }
  return out;
}

}  // namespace fdst
