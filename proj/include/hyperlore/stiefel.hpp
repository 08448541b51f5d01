#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <utility>

#include "hyperlore/errors.hpp"
#include "hyperlore/hyperbolic.hpp"

namespace hyperlore {

// Symmetric part (A + A^T) / 2.
inline Eigen::MatrixXd symm(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

// Frobenius residual ||U^T U - I||_F of the orthonormality constraint.
double stiefel_defect(const Eigen::MatrixXd& u);

// n x r matrix with orthonormal columns, r <= n.
class StiefelPoint {
 public:
  explicit StiefelPoint(Eigen::MatrixXd matrix);

  Eigen::Index rows() const { return matrix_.rows(); }
  Eigen::Index cols() const { return matrix_.cols(); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
};

// Tangent direction at a Stiefel point: symm(U^T dir) = 0.
class StiefelTangent {
 public:
  StiefelTangent(StiefelPoint base, Eigen::MatrixXd dir);

  const StiefelPoint& base() const { return base_; }
  const Eigen::MatrixXd& dir() const { return dir_; }

 private:
  StiefelPoint base_;
  Eigen::MatrixXd dir_;
};

// zeta - U * symm(U^T zeta): orthogonal projection onto the tangent space at
// U. Idempotent; kills U itself (project(U, U) = 0).
Eigen::MatrixXd project_to_stiefel_tangent(const Eigen::MatrixXd& u,
                                           const Eigen::MatrixXd& zeta);
StiefelTangent project_to_stiefel_tangent(const StiefelPoint& u,
                                          const Eigen::MatrixXd& zeta);

// Orthogonal polar factor of A: the nearest matrix with orthonormal columns.
// Computed from a thin SVD (W * V^T), which is well conditioned where the
// textbook A(A^T A)^{-1/2} squares the condition number, and is unique for
// full-rank A regardless of singular-vector sign choices.
// Throws SingularityError when A is rank deficient.
Eigen::MatrixXd orthogonal_factor(const Eigen::MatrixXd& a);

// Polar retraction: orthogonal factor of U + xi.
Eigen::MatrixXd stiefel_retract(const Eigen::MatrixXd& u,
                                const Eigen::MatrixXd& xi);
StiefelPoint stiefel_retract(const StiefelPoint& u, const StiefelTangent& xi);

// Orthonormal factor of an n x r matrix with independent standard normal
// entries; identical seeds give identical matrices on every platform.
StiefelPoint random_stiefel(Eigen::Index n, Eigen::Index r, std::uint64_t seed);

}  // namespace hyperlore
