#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "fdst/features.hpp"

namespace fdst {

FeatureExtractor::FeatureExtractor(std::vector<Layer> layers, std::array<double, 3> mean,
                                   std::array<double, 3> scale, std::vector<int> taps, PoolKind pool_kind)
    : layers_(std::move(layers)), mean_(mean), scale_(scale), taps_(std::move(taps)), pool_kind_(pool_kind) {
  const int L = static_cast<int>(layers_.size());
  if (taps_.empty()) throw std::invalid_argument("tap set is empty");
  for (std::size_t i = 0; i < taps_.size(); ++i) {
    if (taps_[i] < 0 || taps_[i] > L) throw std::invalid_argument("tap index out of range: " + std::to_string(taps_[i]));
    if (i > 0 && taps_[i] <= taps_[i - 1]) throw std::invalid_argument("tap indices must be strictly increasing");
  }

  channels_.assign(L + 1, 3);
  forward_.resize(L);
  backward_.resize(L);
  bias_.resize(L);
  int channels = 3;
  for (int l = 0; l < L; ++l) {
    Layer& layer = layers_[l];
    if (layer.kind == LayerKind::conv3x3) {
      if (layer.in_channels != channels) {
        throw std::invalid_argument("layer " + layer.name + " expects " + std::to_string(layer.in_channels) +
                                    " input channels, got " + std::to_string(channels));
      }
      const int ci = layer.in_channels, co = layer.out_channels;
      if (co <= 0) throw std::invalid_argument("layer " + layer.name + " has no output channels");
      if (layer.weights.size() != static_cast<std::size_t>(co) * ci * 9 ||
          layer.bias.size() != static_cast<std::size_t>(co)) {
        throw std::invalid_argument("layer " + layer.name + " payload size does not match its shape");
      }
      RowMatrix fwd(9 * ci, co);
      RowMatrix bwd(9 * co, ci);
      for (int o = 0; o < co; ++o) {
        for (int i = 0; i < ci; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const double w = layer.weights[((static_cast<std::size_t>(o) * ci + i) * 3 + ky) * 3 + kx];
              fwd((ky * 3 + kx) * ci + i, o) = w;
              bwd(((2 - ky) * 3 + (2 - kx)) * co + o, i) = w;
            }
          }
        }
      }
      forward_[l] = std::move(fwd);
      backward_[l] = std::move(bwd);
      bias_[l] = Eigen::RowVectorXd(co);
      for (int o = 0; o < co; ++o) bias_[l][o] = layer.bias[o];
      channels = co;
    } else if (layer.kind != LayerKind::relu && layer.kind != LayerKind::pool2x2) {
      throw std::invalid_argument("unknown layer kind in " + layer.name);
    }
    channels_[l + 1] = channels;
  }
}

FeatureExtractor FeatureExtractor::with_pool_kind(PoolKind kind) const {
  FeatureExtractor copy = *this;
  copy.pool_kind_ = kind;
  return copy;
}

int FeatureExtractor::channels_at(int tap) const { return channels_.at(static_cast<std::size_t>(tap)); }

int FeatureExtractor::hypercolumn_dim() const {
  int d = 0;
  for (int t : taps_) d += channels_[t];
  return d;
}

FeatureMapStack extract(const FeatureExtractor& fx, const Image& img) {
  validate(img);
  if (img.channels != 3) throw std::invalid_argument("extract expects a 3-channel image");
  const auto& layers = fx.layers();
  const int last = fx.taps().back();

  FeatureMapStack stack;
  stack.source_width = img.width;
  stack.source_height = img.height;
  stack.taps = fx.taps();
  stack.activations.resize(last + 1);
  stack.pool_argmax.resize(last);

  Image x = img;
  for (std::size_t p = 0; p < x.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) x.data[3 * p + c] = (x.data[3 * p + c] - fx.mean()[c]) * fx.scale()[c];
  }
  stack.activations[0] = std::move(x);

  auto is_tap = [&](int pos) { return std::binary_search(fx.taps().begin(), fx.taps().end(), pos); };
  for (int l = 0; l < last; ++l) {
    const Image& in = stack.activations[l];
    switch (layers[l].kind) {
      case LayerKind::conv3x3:
        stack.activations[l + 1] = kernels::conv3x3(in, fx.forward_matrix(l), &fx.bias_row(l));
        break;
      case LayerKind::relu:
        stack.activations[l + 1] = kernels::relu(in);
        // relu backward only needs its own output, so a preceding conv
        // output can go unless it is tapped.
        if (l > 0 && layers[l - 1].kind == LayerKind::conv3x3 && !is_tap(l)) {
          stack.activations[l] = Image();
        }
        break;
      case LayerKind::pool2x2:
        stack.activations[l + 1] =
            kernels::pool2x2(in, fx.pool_kind(), fx.pool_kind() == PoolKind::max ? &stack.pool_argmax[l] : nullptr);
        break;
    }
  }
  return stack;
}

namespace {

struct SampleTap {
  int x0, x1, y0, y1;
  double fx, fy;
};

SampleTap locate(const PixelCoord& c, int src_w, int src_h, int w, int h) {
  const double px = src_w > 1 ? c.x * (w - 1) / (src_w - 1) : 0.0;
  const double py = src_h > 1 ? c.y * (h - 1) / (src_h - 1) : 0.0;
  const int x0 = std::min(static_cast<int>(std::floor(px)), w - 1);
  const int y0 = std::min(static_cast<int>(std::floor(py)), h - 1);
  return {x0, std::min(x0 + 1, w - 1), y0, std::min(y0 + 1, h - 1), px - x0, py - y0};
}

void check_coords(std::span<const PixelCoord> coords, int w, int h) {
  for (const auto& c : coords) {
    if (!(c.x >= 0 && c.y >= 0 && c.x <= w - 1 && c.y <= h - 1)) {
      throw std::out_of_range("sample coordinate (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                              ") outside the source image");
    }
  }
}

}  // namespace

FeatureSet sample_hypercolumns(const FeatureMapStack& stack, std::span<const PixelCoord> coords) {
  check_coords(coords, stack.source_width, stack.source_height);
  int d = 0;
  for (std::size_t t = 0; t < stack.taps.size(); ++t) d += stack.tap(t).channels;

  FeatureSet fs;
  fs.vectors.resize(static_cast<Eigen::Index>(coords.size()), d);
  fs.coords.assign(coords.begin(), coords.end());
  int offset = 0;
  for (std::size_t t = 0; t < stack.taps.size(); ++t) {
    const Image& r = stack.tap(t);
    const int C = r.channels;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const SampleTap s = locate(coords[i], stack.source_width, stack.source_height, r.width, r.height);
      for (int c = 0; c < C; ++c) {
        const double a = r.at(s.x0, s.y0, c), b = r.at(s.x1, s.y0, c);
        const double e = r.at(s.x0, s.y1, c), f = r.at(s.x1, s.y1, c);
        const double top = a + s.fx * (b - a);
        const double bottom = e + s.fx * (f - e);
        fs.vectors(static_cast<Eigen::Index>(i), offset + c) = top + s.fy * (bottom - top);
      }
    }
    offset += C;
  }
  return fs;
}

Image backprop_to_pixels(const FeatureExtractor& fx, const FeatureMapStack& stack,
                         std::span<const PixelCoord> coords, const RowMatrix& grad) {
  check_coords(coords, stack.source_width, stack.source_height);
  if (stack.taps != fx.taps()) throw std::invalid_argument("feature stack was produced by a different extractor");
  if (grad.rows() != static_cast<Eigen::Index>(coords.size()) || grad.cols() != fx.hypercolumn_dim()) {
    throw std::invalid_argument("gradient shape does not match the sampled feature set");
  }

  // Splat each tap's slice of the gradient with the bilinear sampling weights.
  std::vector<Image> tap_grads;
  int offset = 0;
  for (std::size_t t = 0; t < stack.taps.size(); ++t) {
    const Image& r = stack.tap(t);
    Image g(r.width, r.height, r.channels);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const SampleTap s = locate(coords[i], stack.source_width, stack.source_height, r.width, r.height);
      const double w00 = (1 - s.fx) * (1 - s.fy), w10 = s.fx * (1 - s.fy);
      const double w01 = (1 - s.fx) * s.fy, w11 = s.fx * s.fy;
      for (int c = 0; c < r.channels; ++c) {
        const double v = grad(static_cast<Eigen::Index>(i), offset + c);
        g.at(s.x0, s.y0, c) += w00 * v;
        g.at(s.x1, s.y0, c) += w10 * v;
        g.at(s.x0, s.y1, c) += w01 * v;
        g.at(s.x1, s.y1, c) += w11 * v;
      }
    }
    offset += r.channels;
    tap_grads.push_back(std::move(g));
  }

  const auto& layers = fx.layers();
  int tap_cursor = static_cast<int>(stack.taps.size()) - 1;
  const int last = stack.taps.back();
  Image g = std::move(tap_grads[tap_cursor--]);
  for (int l = last - 1; l >= 0; --l) {
    // g is the gradient at activation position l + 1.
    switch (layers[l].kind) {
      case LayerKind::conv3x3:
        g = kernels::conv3x3(g, fx.backward_matrix(l), nullptr);
        break;
      case LayerKind::relu:
        g = kernels::relu_backward(g, stack.activations[l + 1]);
        break;
      case LayerKind::pool2x2: {
        // The pool input is the previous activation, but it may have been
        // released; its dimensions follow from the ceil-mode rule.
        int in_w = 0, in_h = 0;
        for (int k = l; k >= 0; --k) {
          if (!stack.activations[k].empty()) {
            in_w = stack.activations[k].width;
            in_h = stack.activations[k].height;
            break;
          }
        }
        g = kernels::pool2x2_backward(g, in_w, in_h, fx.pool_kind(), &stack.pool_argmax[l]);
        break;
      }
    }
    if (tap_cursor >= 0 && stack.taps[tap_cursor] == l) {
      const Image& add = tap_grads[tap_cursor--];
      for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += add.data[i];
    }
  }

  for (std::size_t p = 0; p < g.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) g.data[3 * p + c] *= fx.scale()[c];
  }
  return g;
}

FeatureExtractor make_random_vgg16(int width_divisor, std::uint64_t seed, PoolKind pool) {
  if (width_divisor < 1) throw std::invalid_argument("width divisor must be >= 1");
  struct Block {
    int convs;
    int width;
  };
  const Block blocks[] = {{2, 64}, {2, 128}, {3, 256}, {3, 512}};
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  std::vector<int> taps{0};
  int channels = 3;
  for (int b = 0; b < 4; ++b) {
    const int width = std::max(1, blocks[b].width / width_divisor);
    for (int k = 0; k < blocks[b].convs; ++k) {
      const std::string suffix = std::to_string(b + 1) + "_" + std::to_string(k + 1);
      Layer conv;
      conv.kind = LayerKind::conv3x3;
      conv.name = "conv" + suffix;
      conv.in_channels = channels;
      conv.out_channels = width;
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (9.0 * channels)));
      conv.weights.resize(static_cast<std::size_t>(width) * channels * 9);
      for (float& w : conv.weights) w = static_cast<float>(normal(rng));
      conv.bias.assign(width, 0.0f);
      layers.push_back(std::move(conv));
      Layer act;
      act.kind = LayerKind::relu;
      act.name = "relu" + suffix;
      layers.push_back(std::move(act));
      channels = width;
    }
    taps.push_back(static_cast<int>(layers.size()));
    if (b < 3) {
      Layer p;
      p.kind = LayerKind::pool2x2;
      p.name = "pool" + std::to_string(b + 1);
      layers.push_back(std::move(p));
    }
  }
  // ImageNet statistics, rounded to f32 so an FDSTW1 round trip is exact.
  auto f32 = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  return FeatureExtractor(std::move(layers), {f32(0.485), f32(0.456), f32(0.406)},
                          {f32(1.0 / 0.229), f32(1.0 / 0.224), f32(1.0 / 0.225)}, std::move(taps), pool);
}

}  // namespace fdst

namespace fdst {

FeatureMapStack extract_taps(const FeatureExtractor& fx, const Image& img) {
  FeatureMapStack stack = extract(fx, img);
  for (std::size_t pos = 0; pos < stack.activations.size(); ++pos) {
    if (!std::binary_search(stack.taps.begin(), stack.taps.end(), static_cast<int>(pos))) {
      stack.activations[pos] = Image();
    }
  }
  stack.pool_argmax.clear();
  return stack;
}

}  // namespace fdst
