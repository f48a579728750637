#include "fdst/pyramid.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace fdst {

namespace {

constexpr std::array<double, 5> kBinomial{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

struct Tap {
  int i0;
  int i1;
  double frac;
};

std::vector<Tap> half_taps(int coarse, int fine) {
  std::vector<Tap> taps(fine);
  for (int x = 0; x < fine; ++x) {
    const double pos = std::min(x / 2.0, static_cast<double>(coarse - 1));
    const int i0 = static_cast<int>(pos);
    const int i1 = std::min(i0 + 1, coarse - 1);
    taps[x] = {i0, i1, pos - i0};
  }
  return taps;
}

int ceil_half(int n, int times) {
  for (int t = 0; t < times; ++t) n = (n + 1) / 2;
  return n;
}

}  // namespace

int max_pyramid_levels(int width, int height) {
  int levels = 1;
  const int side = std::min(width, height);
  while ((1 << levels) <= side) ++levels;
  return levels;
}

Image blur_downsample(const Image& img) {
  validate(img);
  const int W = img.width, H = img.height, C = img.channels;
  const int w2 = (W + 1) / 2, h2 = (H + 1) / 2;

  // Horizontal pass only at even columns, then vertical at even rows.
  Image tmp(w2, H, C);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < w2; ++x) {
      for (int c = 0; c < C; ++c) {
        double s = 0;
        for (int k = -2; k <= 2; ++k) s += kBinomial[k + 2] * img.at(reflect(2 * x + k, W), y, c);
        tmp.at(x, y, c) = s;
      }
    }
  }
  Image out(w2, h2, C);
  for (int y = 0; y < h2; ++y) {
    for (int x = 0; x < w2; ++x) {
      for (int c = 0; c < C; ++c) {
        double s = 0;
        for (int k = -2; k <= 2; ++k) s += kBinomial[k + 2] * tmp.at(x, reflect(2 * y + k, H), c);
        out.at(x, y, c) = s;
      }
    }
  }
  return out;
}

Image upsample2(const Image& coarse, int width, int height) {
  validate(coarse);
  const auto xs = half_taps(coarse.width, width);
  const auto ys = half_taps(coarse.height, height);
  const int C = coarse.channels;
  Image out(width, height, C);
  for (int y = 0; y < height; ++y) {
    const Tap ty = ys[y];
    for (int x = 0; x < width; ++x) {
      const Tap tx = xs[x];
      for (int c = 0; c < C; ++c) {
        const double a = coarse.at(tx.i0, ty.i0, c);
        const double b = coarse.at(tx.i1, ty.i0, c);
        const double d = coarse.at(tx.i0, ty.i1, c);
        const double e = coarse.at(tx.i1, ty.i1, c);
        const double top = a + tx.frac * (b - a);
        const double bottom = d + tx.frac * (e - d);
        out.at(x, y, c) = top + ty.frac * (bottom - top);
      }
    }
  }
  return out;
}

Image upsample2_adjoint(const Image& grad, int coarse_width, int coarse_height) {
  validate(grad);
  const auto xs = half_taps(coarse_width, grad.width);
  const auto ys = half_taps(coarse_height, grad.height);
  const int C = grad.channels;
  Image out(coarse_width, coarse_height, C);
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

LaplacianPyramid decompose_laplacian(const Image& img, int levels) {
  validate(img);
  if (levels < 1) throw std::invalid_argument("pyramid needs at least one level");
  if (levels > max_pyramid_levels(img.width, img.height)) {
    throw std::invalid_argument("too many pyramid levels (" + std::to_string(levels) + ") for " +
                                std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  LaplacianPyramid pyr;
  pyr.base_width = img.width;
  pyr.base_height = img.height;
  Image current = img;
  for (int l = 0; l + 1 < levels; ++l) {
    Image low = blur_downsample(current);
    Image band = current;
    const Image up = upsample2(low, current.width, current.height);
    for (std::size_t i = 0; i < band.data.size(); ++i) band.data[i] -= up.data[i];
    pyr.levels.push_back(std::move(band));
    current = std::move(low);
  }
  pyr.levels.push_back(std::move(current));
  return pyr;
}

namespace {

void check_structure(const LaplacianPyramid& pyr) {
  if (pyr.levels.empty()) throw std::invalid_argument("empty pyramid");
  const int C = pyr.levels.front().channels;
  for (int l = 0; l < pyr.level_count(); ++l) {
    const Image& lvl = pyr.levels[l];
    validate(lvl);
    if (lvl.width != ceil_half(pyr.base_width, l) || lvl.height != ceil_half(pyr.base_height, l) ||
        lvl.channels != C) {
      throw std::invalid_argument("inconsistent dimensions at pyramid level " + std::to_string(l));
    }
  }
}

}  // namespace

Image synthesize_from_pyramid(const LaplacianPyramid& pyr) {
  check_structure(pyr);
  Image img = pyr.levels.back();
  for (int l = pyr.level_count() - 2; l >= 0; --l) {
    const Image& band = pyr.levels[l];
    Image up = upsample2(img, band.width, band.height);
    for (std::size_t i = 0; i < up.data.size(); ++i) up.data[i] += band.data[i];
    img = std::move(up);
  }
  return img;
}

LaplacianPyramid synthesize_adjoint(const Image& grad, const LaplacianPyramid& shape) {
  check_structure(shape);
  if (!grad.same_shape(shape.levels.front())) throw std::invalid_argument("gradient does not match pyramid base");
  LaplacianPyramid out;
  out.base_width = shape.base_width;
  out.base_height = shape.base_height;
  out.levels.push_back(grad);
  for (int l = 1; l < shape.level_count(); ++l) {
    const Image& next = shape.levels[l];
    out.levels.push_back(upsample2_adjoint(out.levels.back(), next.width, next.height));
  }
  return out;
}

}  // namespace fdst
