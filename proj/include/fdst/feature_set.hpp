#pragma once

#include <Eigen/Core>
#include <vector>

namespace fdst {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Position in the source image frame; integer values are pixel centers.
struct PixelCoord {
  double x = 0;
  double y = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// n hypercolumn vectors of dimension d (one per row) and the source pixel
/// each was sampled at.
struct FeatureSet {
  RowMatrix vectors;
  std::vector<PixelCoord> coords;

  int n() const { return static_cast<int>(vectors.rows()); }
  int d() const { return static_cast<int>(vectors.cols()); }
};

}  // namespace fdst
