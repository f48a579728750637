#pragma once

#include "fdst/feature_set.hpp"

namespace fdst {

/// Floor applied to vector norms before dividing in cosine computations.
inline constexpr double kNormFloor = 1e-8;

/// Entry (i, j) is the cosine distance 1 - cos(A_i, B_j), clamped to [0, 2].
using CostMatrix = RowMatrix;

struct LossWeights {
  double alpha = 1.0;   // SS style EMD weight
  double beta = 3.0;    // CD style EMD weight
  double lambda = 0.5;  // style term
  double eta = 1.0;     // content term
  double moment = 1.0;  // moment term (unit weight in the texture objective)

  bool operator==(const LossWeights&) const = default;
};

struct LossTerms {
  double style = 0;
  double moment = 0;
  double content = 0;
  double total = 0;
  LossWeights weights;
};

/// A scalar loss and its gradient with respect to the first operand.
struct ScalarGrad {
  double value = 0;
  RowMatrix grad;
};

CostMatrix cost_matrix(const RowMatrix& A, const RowMatrix& B);

/// Gradient with respect to A of <dC, cost_matrix(A, B)>.
RowMatrix cost_matrix_backward(const RowMatrix& A, const RowMatrix& B, const RowMatrix& dC);

/// max(mean_i min_j C_ij, mean_j min_i C_ij); `grad` is dvalue/dC, routed to
/// the arg-min entries of the larger side (first index wins ties, and the
/// row side wins when both sides are equal).
ScalarGrad relaxed_emd(const CostMatrix& C);

/// Exact optimal transport cost for square C with uniform 1/n marginals,
/// by exhaustive search over assignments. n must be at most 8.
double exact_emd_oracle(const CostMatrix& C);

/// alpha * REMD(A, B_ss) + beta * REMD(A, B_cd); gradient with respect to A.
ScalarGrad style_loss(const FeatureSet& A, const FeatureSet& B_ss, const FeatureSet& B_cd, double alpha, double beta);

/// (1/d) * (|mu_A - mu_cd|_1 + |Sigma_A - Sigma_ss|_1) with biased
/// covariances; gradient with respect to A.
ScalarGrad moment_loss(const FeatureSet& A, const FeatureSet& B_ss, const FeatureSet& B_cd);

/// (1/n^2) * sum_ij |cos(M_i, M_j) - cos(N_i, N_j)|; gradient with respect to M.
ScalarGrad content_loss(const FeatureSet& M, const FeatureSet& N);

struct TotalLoss {
  LossTerms terms;
  RowMatrix grad_a;  // with respect to the style-side output set A
  RowMatrix grad_m;  // with respect to the content-side output set M
};

/// lambda * style + eta * content + moment_weight * moment.
TotalLoss total_loss(const FeatureSet& A, const FeatureSet& B_ss, const FeatureSet& B_cd, const FeatureSet& M,
                     const FeatureSet& N, const LossWeights& w);

}  // namespace fdst
