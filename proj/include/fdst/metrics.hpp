#pragma once

#include <cstdint>

#include "fdst/image.hpp"
#include "json.hpp"

namespace fdst {

struct MetricReport {
  double psnr = 0;
  double ssim = 0;
  double mse = 0;
  double cosine = 0;
  int ahash_distance = 0;
  double hist_similarity = 0;
};

struct PsnrMse {
  double psnr;
  double mse;
};

inline constexpr double kPsnrCap = 100.0;

/// Mean squared difference over all channels; psnr = 10 log10(1 / mse),
/// capped at 100 dB when mse < 1e-10.
PsnrMse psnr_mse(const Image& a, const Image& b);

/// Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5) of
/// the luma images, C1 = 0.01^2, C2 = 0.03^2.
double ssim(const Image& a, const Image& b);

/// Cosine of the flattened pixel vectors.
double cosine_similarity(const Image& a, const Image& b);

/// 64-bit average hash: luma, 8x8 bilinear resize, bit = pixel >= mean.
std::uint64_t ahash(const Image& img);
int ahash_distance(const Image& a, const Image& b);

/// Pearson correlation of unit-sum 256-bin luma histograms. If either
/// histogram is degenerate (one occupied bin or zero variance) the result is
/// 1 for equal histograms and 0 otherwise.
double hist_similarity(const Image& a, const Image& b);

MetricReport compute_metrics(const Image& a, const Image& b);
nlohmann::json to_json(const MetricReport& r);

}  // namespace fdst
