#include "hyperlore/stiefel.hpp"

#include <Eigen/SVD>

#include <string>

#include "hyperlore/random.hpp"

namespace hyperlore {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(where) + ": shape mismatch (" +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
}

}  // namespace

double stiefel_defect(const Eigen::MatrixXd& u) {
  const Eigen::Index r = u.cols();
  return (u.transpose() * u - Eigen::MatrixXd::Identity(r, r)).norm();
}

StiefelPoint::StiefelPoint(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() < matrix_.cols() || matrix_.cols() < 1)
    throw DimensionError("StiefelPoint: need n x r with 1 <= r <= n, got " +
                         std::to_string(matrix_.rows()) + "x" +
                         std::to_string(matrix_.cols()));
  const double defect = stiefel_defect(matrix_);
  if (!(defect < kConstraintTol))
    throw ConstraintViolation(
        "StiefelPoint: columns are not orthonormal (||U^T U - I||_F = " +
        std::to_string(defect) + ")");
}

StiefelTangent::StiefelTangent(StiefelPoint base, Eigen::MatrixXd dir)
    : base_(std::move(base)), dir_(std::move(dir)) {
  require_same_shape(base_.matrix(), dir_, "StiefelTangent");
  const double scale = std::max(1.0, dir_.norm());
  const double defect = symm(base_.matrix().transpose() * dir_).norm();
  if (!(defect < kConstraintTol * scale))
    throw ConstraintViolation(
        "StiefelTangent: direction is not tangent (||symm(U^T dir)||_F = " +
        std::to_string(defect) + ")");
}

Eigen::MatrixXd project_to_stiefel_tangent(const Eigen::MatrixXd& u,
                                           const Eigen::MatrixXd& zeta) {
  require_same_shape(u, zeta, "project_to_stiefel_tangent");
  return zeta - u * symm(u.transpose() * zeta);
}

StiefelTangent project_to_stiefel_tangent(const StiefelPoint& u,
                                          const Eigen::MatrixXd& zeta) {
  return StiefelTangent(u, project_to_stiefel_tangent(u.matrix(), zeta));
}

Eigen::MatrixXd orthogonal_factor(const Eigen::MatrixXd& a) {
  if (a.rows() < a.cols() || a.cols() < 1)
    throw DimensionError("orthogonal_factor: need n x r with 1 <= r <= n");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  // Full column rank is required: the polar factor of a rank-deficient matrix
  // is not unique. Threshold relative to the largest singular value.
  const double floor = sigma[0] * a.rows() * 1e-14;
  if (!(sigma[sigma.size() - 1] > floor))
    throw SingularityError(
        "orthogonal_factor: matrix is rank deficient (smallest singular value " +
        std::to_string(sigma[sigma.size() - 1]) + ")");
  return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd stiefel_retract(const Eigen::MatrixXd& u,
                                const Eigen::MatrixXd& xi) {
  require_same_shape(u, xi, "stiefel_retract");
  return orthogonal_factor(u + xi);
}

StiefelPoint stiefel_retract(const StiefelPoint& u, const StiefelTangent& xi) {
  return StiefelPoint(stiefel_retract(u.matrix(), xi.dir()));
}

StiefelPoint random_stiefel(Eigen::Index n, Eigen::Index r,
                            std::uint64_t seed) {
  if (r < 1 || r > n)
    throw DimensionError("random_stiefel: need 1 <= r <= n, got n = " +
                         std::to_string(n) + ", r = " + std::to_string(r));
  GaussianSampler gauss(seed);
  // A Gaussian matrix is full rank with probability 1; the polar factor of it
  // is Haar-distributed on the manifold.
  return StiefelPoint(orthogonal_factor(gauss.matrix(n, r)));
}

}  // namespace hyperlore
