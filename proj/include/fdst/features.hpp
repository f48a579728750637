#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fdst/feature_set.hpp"
#include "fdst/image.hpp"

namespace fdst {

enum class LayerKind : std::uint8_t { conv3x3 = 0, relu = 1, pool2x2 = 2 };
enum class PoolKind : std::uint8_t { max = 0, avg = 1 };

struct Layer {
  LayerKind kind = LayerKind::relu;
  std::string name;
  int in_channels = 0;   // conv only
  int out_channels = 0;  // conv only
  std::vector<float> weights;  // [out][in][3][3]
  std::vector<float> bias;     // [out]
};

/// Sequential conv3x3 / relu / pool2x2 network used as a fixed feature
/// extractor. Convolutions use stride 1 and one pixel of zero padding;
/// pooling uses 2x2 windows with ceil-mode output sizes.
///
/// Tap t selects the output of layer t (1-based); tap 0 is the normalized
/// input. Hypercolumns concatenate the taps in increasing order.
class FeatureExtractor {
 public:
  FeatureExtractor(std::vector<Layer> layers, std::array<double, 3> mean, std::array<double, 3> scale,
                   std::vector<int> taps, PoolKind pool_kind);

  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<int>& taps() const { return taps_; }
  const std::array<double, 3>& mean() const { return mean_; }
  const std::array<double, 3>& scale() const { return scale_; }
  PoolKind pool_kind() const { return pool_kind_; }

  /// Copy of this extractor with a different pooling kind.
  FeatureExtractor with_pool_kind(PoolKind kind) const;

  /// Channel count of the activation at tap position t.
  int channels_at(int tap) const;
  /// Hypercolumn dimension: sum of the tap channel counts.
  int hypercolumn_dim() const;

  // Packed GEMM operands for layer l (conv only): forward is (9*in) x out,
  // backward is (9*out) x in with spatially flipped kernels.
  const RowMatrix& forward_matrix(int l) const { return forward_[l]; }
  const RowMatrix& backward_matrix(int l) const { return backward_[l]; }
  const Eigen::RowVectorXd& bias_row(int l) const { return bias_[l]; }

 private:
  std::vector<Layer> layers_;
  std::array<double, 3> mean_;
  std::array<double, 3> scale_;
  std::vector<int> taps_;
  PoolKind pool_kind_;
  std::vector<int> channels_;  // channels_[t] for activation position t
  std::vector<RowMatrix> forward_;
  std::vector<RowMatrix> backward_;
  std::vector<Eigen::RowVectorXd> bias_;
};

/// Activations of one image. activations[0] is the normalized input and
/// activations[l + 1] is the output of layer l; conv outputs that feed
/// straight into a relu and are not taps are released after use.
struct FeatureMapStack {
  int source_width = 0;
  int source_height = 0;
  std::vector<int> taps;
  std::vector<Image> activations;
  std::vector<std::vector<std::uint32_t>> pool_argmax;  // per layer; max pooling only

  const Image& tap(std::size_t i) const { return activations[static_cast<std::size_t>(taps[i])]; }
};

FeatureMapStack extract(const FeatureExtractor& fx, const Image& img);

/// Bilinearly samples every tap at each coordinate (align-corners mapping
/// from the source frame to the tap raster) and concatenates in tap order.
FeatureSet sample_hypercolumns(const FeatureMapStack& stack, std::span<const PixelCoord> coords);

/// Gradient with respect to the input image pixels of <grad, sample_hypercolumns(extract(img), coords)>.
/// grad has one row per coordinate and hypercolumn_dim() columns.
Image backprop_to_pixels(const FeatureExtractor& fx, const FeatureMapStack& stack,
                         std::span<const PixelCoord> coords, const RowMatrix& grad);

/// VGG16 topology truncated after relu4_3 with channel widths divided by
/// `width_divisor` and He-normal weights drawn from `seed`. Taps are the
/// normalized pixels, relu1_2, relu2_2, relu3_3 and relu4_3.
FeatureExtractor make_random_vgg16(int width_divisor, std::uint64_t seed, PoolKind pool = PoolKind::avg);

/// Reads an FDSTW1 weight file. If a sidecar manifest "<path>.json" exists,
/// its layer names, shapes and payload checksums are verified as well.
FeatureExtractor load_weights(const std::filesystem::path& path);

/// Writes an FDSTW1 weight file and its "<path>.json" manifest.
void save_weights(const FeatureExtractor& fx, const std::filesystem::path& path);

/// CRC-32 (zlib polynomial) of the little-endian f32 payload of a layer.
std::uint32_t payload_crc32(const Layer& layer);

namespace kernels {

/// 3x3 same convolution of an HWC raster with a packed (9*C_in) x C_out
/// matrix; bias may be null.
Image conv3x3(const Image& in, const RowMatrix& packed, const Eigen::RowVectorXd* bias);
Image relu(const Image& in);
/// Gradient through relu given the relu output.
Image relu_backward(const Image& grad, const Image& out);
Image pool2x2(const Image& in, PoolKind kind, std::vector<std::uint32_t>* argmax);
Image pool2x2_backward(const Image& grad, int in_width, int in_height, PoolKind kind,
                       const std::vector<std::uint32_t>* argmax);

}  // namespace kernels

}  // namespace fdst

namespace fdst {
/// Like extract, but keeps only the tap activations (no backward cache).
FeatureMapStack extract_taps(const FeatureExtractor& fx, const Image& img);
}  // namespace fdst
