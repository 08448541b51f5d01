#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "hyperlore/errors.hpp"

namespace hyperlore {

// Iterate on the search space St(r,n) x H^r x ... x H^r (m copies).
// The m hyperbolic factors are packed column-wise into Zbar: column i is the
// (r+1)-vector [z0_i; z_i], so row 0 holds the time coordinates and rows
// 1..r the subspace coefficients. Plain matrix fields keep the hot paths
// allocation-friendly; validate_product_point enforces the invariants at API
// boundaries.
struct ProductPoint {
  Eigen::MatrixXd U;     // n x r, orthonormal columns
  Eigen::MatrixXd Zbar;  // (r+1) x m, every column on the hyperboloid H^r

  Eigen::Index n() const { return U.rows(); }
  Eigen::Index r() const { return U.cols(); }
  Eigen::Index m() const { return Zbar.cols(); }
  auto z0() const { return Zbar.row(0); }
  auto Z() const { return Zbar.bottomRows(Zbar.rows() - 1); }
};

// Direction in the ambient space of a ProductPoint: an n x r block paired
// with an (r+1) x m block. Tangent vectors and ambient gradients share this
// layout; tangency is a predicate (validate_product_tangent), not a separate
// type.
struct ProductDirection {
  Eigen::MatrixXd U;     // n x r
  Eigen::MatrixXd Zbar;  // (r+1) x m

  static ProductDirection zero_like(const ProductPoint& y);

  ProductDirection& operator+=(const ProductDirection& other);
  ProductDirection& operator-=(const ProductDirection& other);
  ProductDirection& operator*=(double s);
};

using ProductTangent = ProductDirection;
using AmbientGradient = ProductDirection;

ProductDirection operator+(ProductDirection a, const ProductDirection& b);
ProductDirection operator-(ProductDirection a, const ProductDirection& b);
ProductDirection operator*(double s, ProductDirection a);

// Persisted factorization: X_bar is approximated column-wise by
// [z0_i; U * Z_i]. The z0 row is stored explicitly (redundant with the
// hyperboloid constraint) so expansion is exact and validation cheap.
struct FactoredEmbedding {
  Eigen::MatrixXd U;                // n x r, orthonormal columns
  Eigen::MatrixXd Z;                // r x m
  Eigen::VectorXd z0;               // length m, z0_i = sqrt(1 + ||Z_i||^2)
  std::vector<std::string> labels;  // m node labels; may be empty in memory
};

// Column indices of Xbar that fail hyperboloid validation (empty = all good).
std::vector<Eigen::Index> bad_hyperboloid_columns(const Eigen::MatrixXd& Xbar);
// Throws ConstraintViolation listing the offending columns.
void require_hyperboloid_columns(const Eigen::MatrixXd& Xbar,
                                 const std::string& what);

void validate_product_point(const ProductPoint& y);
void validate_product_tangent(const ProductPoint& y, const ProductTangent& xi);
// Checks shapes, orthonormality of U, and the z0 redundancy. Labels are
// optional in memory; pass require_labels = true at persistence boundaries.
void validate_factored(const FactoredEmbedding& f, bool require_labels = false);

// dim St(r,n) + m * dim H^r = nr - r(r+1)/2 + mr.
Eigen::Index manifold_dimension(Eigen::Index n, Eigen::Index r,
                                Eigen::Index m);

// Sum of the factor metrics: Frobenius on the Stiefel block plus the Lorentz
// product on each hyperbolic column. Positive definite on tangent vectors.
double product_metric(const ProductPoint& y, const ProductTangent& xi,
                      const ProductTangent& eta);

// Componentwise tangent projection: Stiefel projection on the U block,
// Lorentz projection on every hyperbolic column. Idempotent and self-adjoint
// with respect to the product metric.
ProductTangent product_project(const ProductPoint& y,
                               const ProductDirection& ambient);

// Componentwise retraction: polar retraction on U, exponential map on each
// hyperbolic column.
ProductPoint product_retract(const ProductPoint& y, const ProductTangent& xi);

// Dense reconstruction: column i of the result is [z0_i; U * Z_i].
Eigen::MatrixXd expand(const FactoredEmbedding& f);
Eigen::MatrixXd expand(const ProductPoint& y);

// Conversions between the iterate layout and the persisted layout.
FactoredEmbedding to_factored(const ProductPoint& y,
                              std::vector<std::string> labels = {});
ProductPoint to_product_point(const FactoredEmbedding& f);

enum class InitStrategy { SvdWarm, Random };

// Starting point for the solver. SvdWarm spans the top-r left singular
// subspace of the spatial block (the closed-form optimum of the spatial
// Euclidean loss); Random draws a uniformly random subspace. Either way
// z_i = U^T x_i and z0_i is recomputed from the hyperboloid constraint.
// The seed only matters for Random.
ProductPoint initialize(const Eigen::MatrixXd& Xbar, Eigen::Index r,
                        InitStrategy strategy, std::uint64_t seed);

}  // namespace hyperlore
