#pragma once

#include <Eigen/Core>

#include <string>

#include "hyperlore/product.hpp"

namespace hyperlore {

// The three reconstruction objectives, by what they penalize:
//   SpatialEuclidean    ||X - UZ||_F^2 on the spatial block only
//   FullEuclidean       ||Xbar - Zhat||_F^2 including the time row
//   HyperbolicDistance  sum_i d_H(xbar_i, zhat_i)^2
// where Zhat has columns [z0_i; U z_i].
enum class LossKind { SpatialEuclidean, FullEuclidean, HyperbolicDistance };

// CLI vocabulary: "svd", "euclid-full", "hyperbolic".
const char* method_name(LossKind kind);
LossKind method_from_name(const std::string& name);

// Everything the trust-region loop needs at one iterate, computed once: the
// loss value, the ambient gradient, and the intermediates shared by every
// Hessian-vector product at the same point (residual matrix for the
// Euclidean losses; U^T X and the distance weights for the hyperbolic one).
// Owns the iterate (movable, so accepted trial points transfer cheaply);
// holds Xbar by pointer, so the data matrix must outlive this object.
class LossTerms {
 public:
  LossTerms(LossKind kind, ProductPoint y, const Eigen::MatrixXd& Xbar);

  const ProductPoint& point() const { return y_; }
  double value() const { return value_; }
  const AmbientGradient& gradient() const { return gradient_; }

  // Directional derivative of the ambient gradient along xi (an ambient
  // direction; tangency is not required). Linear in xi and symmetric under
  // the Euclidean pairing.
  AmbientGradient hessian_vec(const ProductDirection& xi) const;

 private:
  LossKind kind_;
  ProductPoint y_;
  const Eigen::MatrixXd* Xbar_;
  double value_ = 0.0;
  AmbientGradient gradient_;
  Eigen::MatrixXd residual_;   // X - UZ (Euclidean kinds)
  Eigen::MatrixXd projected_;  // U^T X (hyperbolic kind)
  Eigen::VectorXd weight_;     // phi'(c_i) with phi = acosh^2
  Eigen::VectorXd curvature_;  // phi''(c_i)
};

// One-shot wrappers over LossTerms.
double loss_value(LossKind kind, const ProductPoint& y,
                  const Eigen::MatrixXd& Xbar);
AmbientGradient euclidean_gradient(LossKind kind, const ProductPoint& y,
                                   const Eigen::MatrixXd& Xbar);
AmbientGradient euclidean_hessian_vec(LossKind kind, const ProductPoint& y,
                                      const Eigen::MatrixXd& Xbar,
                                      const ProductDirection& xi);

}  // namespace hyperlore
