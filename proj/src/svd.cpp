#include "hyperlore/svd.hpp"

#include <Eigen/SVD>

#include <string>

#include "hyperlore/hyperbolic.hpp"

namespace hyperlore {

namespace detail {

namespace {

// Flip column signs so the largest-magnitude entry of each column is
// positive; the first such entry wins on exact ties. Makes singular vectors
// platform-stable (they are only defined up to sign).
void fix_column_signs(Eigen::MatrixXd& u) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index pivot = 0;
    u.col(j).cwiseAbs().maxCoeff(&pivot);
    if (u(pivot, j) < 0.0) u.col(j) = -u.col(j);
  }
}

}  // namespace

Eigen::MatrixXd top_left_singular_vectors(const Eigen::MatrixXd& X,
                                          Eigen::Index r) {
  const Eigen::Index n = X.rows();
  if (r < 1 || r > n)
    throw InvalidArgument("top_left_singular_vectors: need 1 <= r <= " +
                          std::to_string(n) + ", got " + std::to_string(r));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
  const Eigen::Index have = std::min<Eigen::Index>(svd.matrixU().cols(), r);
  Eigen::MatrixXd u(n, r);
  u.leftCols(have) = svd.matrixU().leftCols(have);

  // r can exceed min(n, m): complete the basis from standard basis vectors,
  // orthonormalized against what is already there. Deterministic by
  // construction (fixed candidate order, fixed acceptance threshold).
  Eigen::Index filled = have;
  for (Eigen::Index k = 0; k < n && filled < r; ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(n, k);
    v -= u.leftCols(filled) * (u.leftCols(filled).transpose() * v);
    const double norm = v.norm();
    if (norm > 0.5) u.col(filled++) = v / norm;
  }
  if (filled < r)
    throw NumericError("top_left_singular_vectors: basis completion failed");
  fix_column_signs(u);
  return u;
}

}  // namespace detail

FactoredEmbedding solve_svd(const Eigen::MatrixXd& Xbar, Eigen::Index r) {
  const Eigen::Index n = Xbar.rows() - 1;
  const Eigen::Index m = Xbar.cols();
  if (r < 1 || r > std::min(n, m))
    throw InvalidArgument("solve_svd: need 1 <= r <= min(n, m) = " +
                          std::to_string(std::min(n, m)) + ", got " +
                          std::to_string(r));
  require_hyperboloid_columns(Xbar, "solve_svd");

  FactoredEmbedding f;
  f.U = detail::top_left_singular_vectors(Xbar.bottomRows(n), r);
  f.Z.noalias() = f.U.transpose() * Xbar.bottomRows(n);
  f.z0 = (f.Z.colwise().squaredNorm().array() + 1.0).sqrt().transpose();
  return f;
}

double best_rank_r_error(const Eigen::MatrixXd& Xbar, Eigen::Index r) {
  const Eigen::Index n = Xbar.rows() - 1;
  if (n < 1) throw DimensionError("best_rank_r_error: need at least 2 rows");
  if (r < 0 || r > n)
    throw InvalidArgument("best_rank_r_error: need 0 <= r <= n = " +
                          std::to_string(n) + ", got " + std::to_string(r));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Xbar.bottomRows(n));
  const auto& sigma = svd.singularValues();
  double tail = 0.0;
  for (Eigen::Index k = sigma.size() - 1; k >= r; --k)
    tail += sigma[k] * sigma[k];
  return tail;
}

}  // namespace hyperlore
