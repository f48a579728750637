#include "fdst/metrics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fdst {

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  validate(a);
  validate(b);
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": image dimensions differ");
}

}  // namespace

PsnrMse psnr_mse(const Image& a, const Image& b) {
  require_same(a, b, "psnr_mse");
  double sum = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.data.size());
  return {mse < 1e-10 ? kPsnrCap : 10.0 * std::log10(1.0 / mse), mse};
}

double ssim(const Image& a_in, const Image& b_in) {
  require_same(a_in, b_in, "ssim");
  constexpr int kRadius = 5;
  constexpr double kSigma = 1.5;
  constexpr double C1 = 0.01 * 0.01;
  constexpr double C2 = 0.03 * 0.03;
  if (a_in.width < 2 * kRadius + 1 || a_in.height < 2 * kRadius + 1) {
    throw std::invalid_argument("ssim: images must be at least 11x11");
  }
  const Image a = to_luma(a_in);
  const Image b = to_luma(b_in);
  const int W = a.width, H = a.height;

  std::array<double, 2 * kRadius + 1> k{};
  double ksum = 0;
  for (int i = -kRadius; i <= kRadius; ++i) ksum += k[i + kRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));
  for (double& v : k) v /= ksum;

  // Separable weighted moments over valid windows only.
  const int ow = W - 2 * kRadius, oh = H - 2 * kRadius;
  auto filter = [&](auto&& value) {
    std::vector<double> rows(static_cast<std::size_t>(ow) * H);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < ow; ++x) {
        double s = 0;
        for (int t = 0; t <= 2 * kRadius; ++t) s += k[t] * value(x + t, y);
        rows[static_cast<std::size_t>(y) * ow + x] = s;
      }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double s = 0;
        for (int t = 0; t <= 2 * kRadius; ++t) s += k[t] * rows[static_cast<std::size_t>(y + t) * ow + x];
        out[static_cast<std::size_t>(y) * ow + x] = s;
      }
    }
    return out;
  };
  auto A = [&](int x, int y) { return a.data[static_cast<std::size_t>(y) * W + x]; };
  auto B = [&](int x, int y) { return b.data[static_cast<std::size_t>(y) * W + x]; };
  const auto ux = filter(A);
  const auto uy = filter(B);
  const auto uxx = filter([&](int x, int y) { return A(x, y) * A(x, y); });
  const auto uyy = filter([&](int x, int y) { return B(x, y) * B(x, y); });
  const auto uxy = filter([&](int x, int y) { return A(x, y) * B(x, y); });

  double total = 0;
  for (std::size_t i = 0; i < ux.size(); ++i) {
    const double vx = uxx[i] - ux[i] * ux[i];
    const double vy = uyy[i] - uy[i] * uy[i];
    const double vxy = uxy[i] - ux[i] * uy[i];
    const double num = (2 * ux[i] * uy[i] + C1) * (2 * vxy + C2);
    const double den = (ux[i] * ux[i] + uy[i] * uy[i] + C1) * (vx + vy + C2);
    total += num / den;
  }
  return total / static_cast<double>(ux.size());
}

double cosine_similarity(const Image& a, const Image& b) {
  require_same(a, b, "cosine_similarity");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    dot += a.data[i] * b.data[i];
    na += a.data[i] * a.data[i];
    nb += b.data[i] * b.data[i];
  }
  if (na == 0 || nb == 0) throw std::invalid_argument("cosine_similarity: zero-norm image");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::uint64_t ahash(const Image& img) {
  const Image small = resize_bilinear(to_luma(img), 8, 8);
  double mean = 0;
  for (double v : small.data) mean += v;
  mean /= 64.0;
  std::uint64_t hash = 0;
  for (int i = 0; i < 64; ++i) {
    if (small.data[i] >= mean) hash |= std::uint64_t{1} << i;
  }
  return hash;
}

int ahash_distance(const Image& a, const Image& b) { return std::popcount(ahash(a) ^ ahash(b)); }

namespace {

std::array<double, 256> luma_histogram(const Image& img) {
  const Image g = to_luma(img);
  std::array<double, 256> h{};
  for (double v : g.data) {
    const long bin = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    h[static_cast<std::size_t>(bin)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(g.data.size());
  return h;
}

}  // namespace

double hist_similarity(const Image& a, const Image& b) {
  validate(a);
  validate(b);
  const auto ha = luma_histogram(a);
  const auto hb = luma_histogram(b);
  double ma = 0, mb = 0;
  int occupied_a = 0, occupied_b = 0;
  for (int i = 0; i < 256; ++i) {
    ma += ha[i];
    mb += hb[i];
    occupied_a += ha[i] > 0;
    occupied_b += hb[i] > 0;
  }
  ma /= 256.0;
  mb /= 256.0;
  double cov = 0, va = 0, vb = 0;
  for (int i = 0; i < 256; ++i) {
    cov += (ha[i] - ma) * (hb[i] - mb);
    va += (ha[i] - ma) * (ha[i] - ma);
    vb += (hb[i] - mb) * (hb[i] - mb);
  }
  if (occupied_a <= 1 || occupied_b <= 1 || va == 0 || vb == 0) return ha == hb ? 1.0 : 0.0;
  return cov / std::sqrt(va * vb);
}

MetricReport compute_metrics(const Image& a, const Image& b) {
  MetricReport r;
  const auto pm = psnr_mse(a, b);
  r.psnr = pm.psnr;
  r.mse = pm.mse;
  r.ssim = ssim(a, b);
  r.cosine = cosine_similarity(a, b);
  r.ahash_distance = ahash_distance(a, b);
  r.hist_similarity = hist_similarity(a, b);
  return r;
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"psnr", r.psnr},     {"ssim", r.ssim},
          {"mse", r.mse},       {"cosine", r.cosine},
          {"ahash_distance", r.ahash_distance}, {"hist_similarity", r.hist_similarity}};
}

}  // namespace fdst
