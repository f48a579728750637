#include "fdst/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdst {

namespace {

Eigen::VectorXd floored_norms(const RowMatrix& X) {
  Eigen::VectorXd n = X.rowwise().norm();
  for (Eigen::Index i = 0; i < n.size(); ++i) n[i] = std::max(n[i], kNormFloor);
  return n;
}

RowMatrix normalize_rows(const RowMatrix& X, const Eigen::VectorXd& norms) {
  return norms.cwiseInverse().asDiagonal() * X;
}

void require_same_dim(const FeatureSet& a, const FeatureSet& b, const char* what) {
  if (a.d() != b.d()) {
    throw std::invalid_argument(std::string(what) + ": hypercolumn dimensions differ (" + std::to_string(a.d()) +
                                " vs " + std::to_string(b.d()) + ")");
  }
}

struct Normalized {
  Eigen::VectorXd norms;
  RowMatrix unit;
};

Normalized normalize(const RowMatrix& X) {
  Normalized n{floored_norms(X), {}};
  n.unit = normalize_rows(X, n.norms);
  return n;
}

// Cosine matrix cos(A_i, B_j) with floored norms.
RowMatrix cosine_matrix(const RowMatrix& A, const RowMatrix& B) {
  return normalize(A).unit * normalize(B).unit.transpose();
}

// Turns row-wise sums direct_i = sum_j G_ij Bn_j and weight_i =
// sum_j G_ij cos_ij into the gradient with respect to A.
void finish_cosine_backward(const RowMatrix& A, const Normalized& a, const Eigen::VectorXd& weight, RowMatrix& grad) {
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    // Below the floor the norm is a constant, so only the direct term remains.
    if (A.row(i).norm() > kNormFloor) grad.row(i) -= weight[i] * a.unit.row(i);
    grad.row(i) /= a.norms[i];
  }
}

// Gradient with respect to A of <G, cos(A, B)> given the forward products.
RowMatrix cosine_backward(const RowMatrix& A, const Normalized& a, const Normalized& b, const RowMatrix& cos,
                          const RowMatrix& G) {
  RowMatrix grad = G * b.unit;
  const Eigen::VectorXd weight = (G.array() * cos.array()).rowwise().sum();
  finish_cosine_backward(A, a, weight, grad);
  return grad;
}

RowMatrix cosine_backward(const RowMatrix& A, const RowMatrix& B, const RowMatrix& G) {
  const Normalized a = normalize(A);
  const Normalized b = normalize(B);
  return cosine_backward(A, a, b, a.unit * b.unit.transpose(), G);
}

struct SparseEntry {
  Eigen::Index row;
  Eigen::Index col;
  double value;
};

// Same as cosine_backward for a G with few nonzeros.
RowMatrix cosine_backward_sparse(const RowMatrix& A, const Normalized& a, const Normalized& b, const RowMatrix& cos,
                                 const std::vector<SparseEntry>& G) {
  RowMatrix grad = RowMatrix::Zero(A.rows(), A.cols());
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(A.rows());
  for (const SparseEntry& e : G) {
    grad.row(e.row) += e.value * b.unit.row(e.col);
    weight[e.row] += e.value * cos(e.row, e.col);
  }
  finish_cosine_backward(A, a, weight, grad);
  return grad;
}

double sign(double v) { return v > 0 ? 1.0 : v < 0 ? -1.0 : 0.0; }

// 1 - cos clamped to [0, 2]. Entries near zero are recomputed as
// |a - b|^2 / 2 of the unit vectors, which equals 1 - cos but is exactly 0
// for identical (or power-of-two scaled) vectors.
CostMatrix cost_from_cos(const RowMatrix& cos, const Normalized& a, const Normalized& b) {
  CostMatrix C = (1.0 - cos.array()).matrix().cwiseMax(0.0).cwiseMin(2.0);
  if (!C.allFinite()) throw std::invalid_argument("cost matrix: non-finite feature vector");
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    for (Eigen::Index j = 0; j < C.cols(); ++j) {
      if (C(i, j) < 1e-6) C(i, j) = 0.5 * (a.unit.row(i) - b.unit.row(j)).squaredNorm();
    }
  }
  return C;
}

}  // namespace

CostMatrix cost_matrix(const RowMatrix& A, const RowMatrix& B) {
  if (A.cols() != B.cols()) throw std::invalid_argument("cost_matrix: dimension mismatch");
  const Normalized a = normalize(A);
  const Normalized b = normalize(B);
  return cost_from_cos(a.unit * b.unit.transpose(), a, b);
}

RowMatrix cost_matrix_backward(const RowMatrix& A, const RowMatrix& B, const RowMatrix& dC) {
  return -cosine_backward(A, B, dC);
}

namespace {

// Value of the relaxed EMD and the nonzero entries of its gradient in C.
double relaxed_emd_sparse(const CostMatrix& C, std::vector<SparseEntry>& grad) {
  const Eigen::Index rows = C.rows(), cols = C.cols();
  if (rows == 0 || cols == 0) throw std::invalid_argument("relaxed_emd: empty cost matrix");

  std::vector<Eigen::Index> row_arg(rows, 0), col_arg(cols, 0);
  std::vector<double> col_min(cols, std::numeric_limits<double>::infinity());
  double row_sum = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double c = C(i, j);
      if (c < best) {
        best = c;
        row_arg[i] = j;
      }
      if (c < col_min[j]) {
        col_min[j] = c;
        col_arg[j] = i;
      }
    }
    row_sum += best;
  }
  const double row_side = row_sum / static_cast<double>(rows);
  const double col_side = std::accumulate(col_min.begin(), col_min.end(), 0.0) / static_cast<double>(cols);

  grad.clear();
  if (row_side >= col_side) {
    for (Eigen::Index i = 0; i < rows; ++i) grad.push_back({i, row_arg[i], 1.0 / static_cast<double>(rows)});
    return row_side;
  }
  for (Eigen::Index j = 0; j < cols; ++j) grad.push_back({col_arg[j], j, 1.0 / static_cast<double>(cols)});
  return col_side;
}

}  // namespace

ScalarGrad relaxed_emd(const CostMatrix& C) {
  std::vector<SparseEntry> entries;
  ScalarGrad out;
  out.value = relaxed_emd_sparse(C, entries);
  out.grad = RowMatrix::Zero(C.rows(), C.cols());
  for (const SparseEntry& e : entries) out.grad(e.row, e.col) += e.value;
  return out;
}

double exact_emd_oracle(const CostMatrix& C) {
  const Eigen::Index n = C.rows();
  if (n != C.cols() || n == 0) throw std::invalid_argument("exact_emd_oracle: needs a nonempty square matrix");
  if (n > 8) throw std::invalid_argument("exact_emd_oracle: size " + std::to_string(n) + " exceeds 8");
  // With equal set sizes and uniform marginals an optimal plan is a scaled
  // permutation (Birkhoff), so the minimum over permutations is exact.
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0;
    for (Eigen::Index i = 0; i < n; ++i) s += C(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

ScalarGrad style_loss(const FeatureSet& A, const FeatureSet& B_ss, const FeatureSet& B_cd, double alpha, double beta) {
  require_same_dim(A, B_ss, "style_loss");
  require_same_dim(A, B_cd, "style_loss");
  if (alpha < 0 || beta < 0) throw std::invalid_argument("style_loss: weights must be non-negative");

  ScalarGrad out;
  out.grad = RowMatrix::Zero(A.n(), A.d());
  const Normalized a = normalize(A.vectors);
  std::vector<SparseEntry> entries;
  auto add_term = [&](const FeatureSet& B, double weight) {
    if (weight == 0) return;
    const Normalized b = normalize(B.vectors);
    const RowMatrix cos = a.unit * b.unit.transpose();
    const CostMatrix C = cost_from_cos(cos, a, b);
    out.value += weight * relaxed_emd_sparse(C, entries);
    // dC/dcos = -1.
    for (SparseEntry& e : entries) e.value *= -weight;
    out.grad += cosine_backward_sparse(A.vectors, a, b, cos, entries);
  };
  add_term(B_ss, alpha);
  add_term(B_cd, beta);
  return out;
}

ScalarGrad moment_loss(const FeatureSet& A, const FeatureSet& B_ss, const FeatureSet& B_cd) {
  require_same_dim(A, B_ss, "moment_loss");
  require_same_dim(A, B_cd, "moment_loss");
  if (A.n() < 2 || B_ss.n() < 2 || B_cd.n() < 2) throw std::invalid_argument("moment_loss: sets too small");
  const double d = A.d();
  const double n = A.n();

  const Eigen::RowVectorXd mu_a = A.vectors.colwise().mean();
  const Eigen::RowVectorXd mu_cd = B_cd.vectors.colwise().mean();
  const Eigen::RowVectorXd mu_ss = B_ss.vectors.colwise().mean();
  const RowMatrix Ac = A.vectors.rowwise() - mu_a;
  const RowMatrix Sc = B_ss.vectors.rowwise() - mu_ss;
  const RowMatrix cov_a = (Ac.transpose() * Ac) / n;
  const RowMatrix cov_ss = (Sc.transpose() * Sc) / static_cast<double>(B_ss.n());

  const Eigen::RowVectorXd mean_diff = mu_a - mu_cd;
  const RowMatrix cov_diff = cov_a - cov_ss;

  ScalarGrad out;
  out.value = (mean_diff.cwiseAbs().sum() + cov_diff.cwiseAbs().sum()) / d;

  const Eigen::RowVectorXd mean_sign = mean_diff.unaryExpr(&sign);
  RowMatrix cov_sign = cov_diff.unaryExpr(&sign);
  // Symmetrize so that rounding asymmetries in cov_a cannot bias the gradient.
  cov_sign = 0.5 * (cov_sign + cov_sign.transpose()).eval();
  out.grad = (2.0 / n) * (Ac * cov_sign);
  out.grad.rowwise() += mean_sign / n;
  out.grad /= d;
  return out;
}

ScalarGrad content_loss(const FeatureSet& M, const FeatureSet& N) {
  require_same_dim(M, N, "content_loss");
  if (M.n() != N.n() || M.coords != N.coords) throw std::invalid_argument("content_loss: sets sampled at different coordinates");
  const double n = M.n();
  if (M.n() == 0) throw std::invalid_argument("content_loss: empty sets");

  const Normalized m = normalize(M.vectors);
  const RowMatrix sm = m.unit * m.unit.transpose();
  const RowMatrix sn = cosine_matrix(N.vectors, N.vectors);
  const RowMatrix diff = sm - sn;

  ScalarGrad out;
  out.value = diff.cwiseAbs().sum() / (n * n);
  // d|S_ij - T_ij| / dS_ij, symmetrized because M_i enters both row i and
  // column i; the diagonal is constant and carries no gradient.
  RowMatrix g = diff.unaryExpr(&sign);
  g = (g + g.transpose()).eval() / (n * n);
  g.diagonal().setZero();
  out.grad = cosine_backward(M.vectors, m, m, sm, g);
  return out;
}

TotalLoss total_loss(const FeatureSet& A, const FeatureSet& B_ss, const FeatureSet& B_cd, const FeatureSet& M,
                     const FeatureSet& N, const LossWeights& w) {
  if (w.lambda < 0 || w.eta < 0 || w.moment < 0) throw std::invalid_argument("total_loss: weights must be non-negative");
  TotalLoss out;
  out.terms.weights = w;

  ScalarGrad style = style_loss(A, B_ss, B_cd, w.alpha, w.beta);
  ScalarGrad moment = moment_loss(A, B_ss, B_cd);
  ScalarGrad content = content_loss(M, N);

  out.terms.style = style.value;
  out.terms.moment = moment.value;
  out.terms.content = content.value;
  out.terms.total = w.lambda * style.value + w.eta * content.value + w.moment * moment.value;
  out.grad_a = w.lambda * style.grad + w.moment * moment.grad;
  out.grad_m = w.eta * content.grad;
  return out;
}

}  // namespace fdst
