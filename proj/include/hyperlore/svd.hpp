#pragma once

#include <Eigen/Core>

#include "hyperlore/product.hpp"

namespace hyperlore {

// Closed-form minimizer of the spatial Euclidean loss ||X - UZ||_F^2, where
// X is the spatial block (rows 1..n) of Xbar: U spans the top-r left singular
// subspace of X, Z = U^T X, and z0 is recomputed from the hyperboloid
// constraint (the original time row is reproduced only implicitly). Labels
// are left empty. Deterministic across platforms via a fixed singular-vector
// sign convention.
FactoredEmbedding solve_svd(const Eigen::MatrixXd& Xbar, Eigen::Index r);

// Squared Frobenius error of the best rank-r approximation of the spatial
// block: the singular-value tail sum_{k>r} sigma_k^2. This is the optimality
// floor for the spatial-block reconstruction of any method at the same rank.
double best_rank_r_error(const Eigen::MatrixXd& Xbar, Eigen::Index r);

namespace detail {

// Top-r left singular vectors of X with the sign of each column fixed so its
// largest-magnitude entry is positive (first such entry on ties). When r
// exceeds the number of singular vectors available, the basis is completed
// deterministically by orthonormalizing standard basis vectors against it.
Eigen::MatrixXd top_left_singular_vectors(const Eigen::MatrixXd& X,
                                          Eigen::Index r);

}  // namespace detail

}  // namespace hyperlore
