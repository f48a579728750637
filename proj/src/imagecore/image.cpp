#include "fdst/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fdst {

Image::Image(int w, int h, int c, double fill)
    : width(w), height(h), channels(c),
      data(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0) * std::max(c, 0), fill) {}

void validate(const Image& img) {
  if (img.width <= 0 || img.height <= 0 || img.channels <= 0) {
    throw std::invalid_argument("image has zero dimension");
  }
  if (img.data.size() != img.pixel_count() * img.channels) {
    throw std::invalid_argument("image data length " + std::to_string(img.data.size()) +
                                " does not match " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + "x" + std::to_string(img.channels));
  }
}

namespace {

struct Tap {
  int i0;
  int i1;
  double frac;
};

// Source taps for each output index under the align-corners convention.
std::vector<Tap> axis_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  for (int o = 0; o < dst; ++o) {
    double pos = dst > 1 ? static_cast<double>(o) * (src - 1) / (dst - 1) : 0.0;
    int i0 = std::min(static_cast<int>(std::floor(pos)), src - 1);
    int i1 = std::min(i0 + 1, src - 1);
    taps[o] = {i0, i1, pos - i0};
  }
  return taps;
}

}  // namespace

Image resize_bilinear(const Image& img, int width, int height) {
  validate(img);
  if (width < 1 || height < 1) throw std::invalid_argument("resize target must be at least 1x1");
  if (width == img.width && height == img.height) return img;

  const auto xs = axis_taps(img.width, width);
  const auto ys = axis_taps(img.height, height);
  const int C = img.channels;
  Image out(width, height, C);
  for (int y = 0; y < height; ++y) {
    const Tap ty = ys[y];
    for (int x = 0; x < width; ++x) {
      const Tap tx = xs[x];
      for (int c = 0; c < C; ++c) {
        // a + f (b - a) keeps constant inputs exactly constant.
        const double a = img.at(tx.i0, ty.i0, c);
        const double b = img.at(tx.i1, ty.i0, c);
        const double d = img.at(tx.i0, ty.i1, c);
        const double e = img.at(tx.i1, ty.i1, c);
        const double top = a + tx.frac * (b - a);
        const double bottom = d + tx.frac * (e - d);
        out.at(x, y, c) = top + ty.frac * (bottom - top);
      }
    }
  }
  return out;
}

Image resize_bilinear_adjoint(const Image& grad, int src_width, int src_height) {
  validate(grad);
  if (src_width < 1 || src_height < 1) throw std::invalid_argument("adjoint source must be at least 1x1");
  if (grad.width == src_width && grad.height == src_height) return grad;

  const auto xs = axis_taps(src_width, grad.width);
  const auto ys = axis_taps(src_height, grad.height);
  const int C = grad.channels;
  Image out(src_width, src_height, C);
  for (int y = 0; y < grad.height; ++y) {
    const Tap ty = ys[y];
    for (int x = 0; x < grad.width; ++x) {
      const Tap tx = xs[x];
      const double w00 = (1 - tx.frac) * (1 - ty.frac);
      const double w10 = tx.frac * (1 - ty.frac);
      const double w01 = (1 - tx.frac) * ty.frac;
      const double w11 = tx.frac * ty.frac;
      for (int c = 0; c < C; ++c) {
        const double g = grad.at(x, y, c);
        out.at(tx.i0, ty.i0, c) += w00 * g;
        out.at(tx.i1, ty.i0, c) += w10 * g;
        out.at(tx.i0, ty.i1, c) += w01 * g;
        out.at(tx.i1, ty.i1, c) += w11 * g;
      }
    }
  }
  return out;
}

std::array<int, 2> fit_long_side(int width, int height, int long_side) {
  if (width <= 0 || height <= 0 || long_side <= 0) throw std::invalid_argument("fit_long_side: non-positive size");
  if (width >= height) {
    int h = std::max(1, static_cast<int>(std::lround(static_cast<double>(height) * long_side / width)));
    return {long_side, h};
  }
  int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(width) * long_side / height)));
  return {w, long_side};
}

Image to_luma(const Image& img) {
  validate(img);
  if (img.channels == 1) return img;
  if (img.channels != 3) throw std::invalid_argument("to_luma expects 1 or 3 channels");
  Image out(img.width, img.height, 1);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    out.data[p] = 0.299 * img.data[3 * p] + 0.587 * img.data[3 * p + 1] + 0.114 * img.data[3 * p + 2];
  }
  return out;
}

Image to_rgb(const Image& img) {
  validate(img);
  if (img.channels == 3) return img;
  if (img.channels != 1) throw std::invalid_argument("to_rgb expects 1 or 3 channels");
  Image out(img.width, img.height, 3);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    out.data[3 * p] = out.data[3 * p + 1] = out.data[3 * p + 2] = img.data[p];
  }
  return out;
}

std::array<double, 3> mean_color(const Image& rgb) {
  validate(rgb);
  if (rgb.channels != 3) throw std::invalid_argument("mean_color expects 3 channels");
  std::array<double, 3> sum{0, 0, 0};
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) sum[c] += rgb.data[3 * p + c];
  }
  const double n = static_cast<double>(rgb.pixel_count());
  return {sum[0] / n, sum[1] / n, sum[2] / n};
}

Image clamp01(Image img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

}  // namespace fdst
