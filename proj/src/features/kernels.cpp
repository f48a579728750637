#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "fdst/features.hpp"
#include "fdst/parallel.hpp"

namespace fdst::kernels {

namespace {
// Pixels per GEMM chunk. Fixed so that chunking never depends on threads.
constexpr std::size_t kConvGrain = 1024;
}  // namespace

Image conv3x3(const Image& in, const RowMatrix& packed, const Eigen::RowVectorXd* bias) {
  const int W = in.width, H = in.height, C = in.channels;
  const Eigen::Index K = packed.rows();
  const Eigen::Index out_c = packed.cols();
  if (K != 9 * static_cast<Eigen::Index>(C)) throw std::invalid_argument("conv3x3: channel mismatch");
  Image out(W, H, static_cast<int>(out_c));
  const std::size_t pixels = in.pixel_count();

  parallel_for_chunks(pixels, kConvGrain, [&](std::size_t p0, std::size_t p1) {
    const auto P = static_cast<Eigen::Index>(p1 - p0);
    std::vector<double> cols(static_cast<std::size_t>(P * K));
    for (std::size_t p = p0; p < p1; ++p) {
      const int y = static_cast<int>(p / W);
      const int x = static_cast<int>(p % W);
      double* row = cols.data() + (p - p0) * K;
      for (int ky = 0; ky < 3; ++ky) {
        const int yy = y + ky - 1;
        for (int kx = 0; kx < 3; ++kx, row += C) {
          const int xx = x + kx - 1;
          if (yy < 0 || yy >= H || xx < 0 || xx >= W) {
            std::fill(row, row + C, 0.0);
          } else {
            std::memcpy(row, &in.data[(static_cast<std::size_t>(yy) * W + xx) * C], sizeof(double) * C);
          }
        }
      }
    }
    Eigen::Map<const RowMatrix> A(cols.data(), P, K);
    Eigen::Map<RowMatrix> Y(out.data.data() + p0 * out_c, P, out_c);
    Y.noalias() = A * packed;
    if (bias) Y.rowwise() += *bias;
  });
  return out;
}

Image relu(const Image& in) {
  Image out = in;
  for (double& v : out.data) v = v > 0 ? v : 0.0;
  return out;
}

Image relu_backward(const Image& grad, const Image& out) {
  if (!grad.same_shape(out)) throw std::invalid_argument("relu_backward: shape mismatch");
  Image g = grad;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    if (!(out.data[i] > 0)) g.data[i] = 0.0;
  }
  return g;
}

Image pool2x2(const Image& in, PoolKind kind, std::vector<std::uint32_t>* argmax) {
  const int W = in.width, H = in.height, C = in.channels;
  const int w2 = (W + 1) / 2, h2 = (H + 1) / 2;
  Image out(w2, h2, C);
  if (kind == PoolKind::max && argmax) argmax->assign(out.data.size(), 0);
  for (int y = 0; y < h2; ++y) {
    for (int x = 0; x < w2; ++x) {
      const int y0 = 2 * y, x0 = 2 * x;
      const int y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
      for (int c = 0; c < C; ++c) {
        const std::size_t o = (static_cast<std::size_t>(y) * w2 + x) * C + c;
        if (kind == PoolKind::avg) {
          double s = 0;
          int count = 0;
          for (int yy = y0; yy <= y1; ++yy) {
            for (int xx = x0; xx <= x1; ++xx) {
              s += in.at(xx, yy, c);
              ++count;
            }
          }
          out.data[o] = s / count;
        } else {
          std::size_t best = (static_cast<std::size_t>(y0) * W + x0) * C + c;
          for (int yy = y0; yy <= y1; ++yy) {
            for (int xx = x0; xx <= x1; ++xx) {
              const std::size_t idx = (static_cast<std::size_t>(yy) * W + xx) * C + c;
              if (in.data[idx] > in.data[best]) best = idx;
            }
          }
          out.data[o] = in.data[best];
          if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return out;
}

Image pool2x2_backward(const Image& grad, int in_width, int in_height, PoolKind kind,
                       const std::vector<std::uint32_t>* argmax) {
  const int C = grad.channels;
  if (grad.width != (in_width + 1) / 2 || grad.height != (in_height + 1) / 2) {
    throw std::invalid_argument("pool2x2_backward: shape mismatch");
  }
  Image out(in_width, in_height, C);
  if (kind == PoolKind::max) {
    if (!argmax || argmax->size() != grad.data.size()) throw std::invalid_argument("pool2x2_backward: missing argmax");
    for (std::size_t o = 0; o < grad.data.size(); ++o) out.data[(*argmax)[o]] += grad.data[o];
    return out;
  }
  for (int y = 0; y < grad.height; ++y) {
    for (int x = 0; x < grad.width; ++x) {
      const int y0 = 2 * y, x0 = 2 * x;
      const int y1 = std::min(y0 + 1, in_height - 1), x1 = std::min(x0 + 1, in_width - 1);
      const int count = (y1 - y0 + 1) * (x1 - x0 + 1);
      for (int c = 0; c < C; ++c) {
        const double g = grad.at(x, y, c) / count;
        for (int yy = y0; yy <= y1; ++yy) {
          for (int xx = x0; xx <= x1; ++xx) out.at(xx, yy, c) += g;
        }
      }
    }
  }
  return out;
}

}  // namespace fdst::kernels
