#include <Eigen/Dense>

#include <doctest.h>

#include <cmath>

#include "hyperlore/losses.hpp"
#include "hyperlore/product.hpp"
#include "hyperlore/random.hpp"
#include "hyperlore/stiefel.hpp"
#include "hyperlore/svd.hpp"

using namespace hyperlore;

namespace {

Eigen::MatrixXd random_hyperboloid_data(Eigen::Index n, Eigen::Index m,
                                        std::uint64_t seed) {
  GaussianSampler gauss(seed);
  Eigen::MatrixXd xbar(n + 1, m);
  xbar.bottomRows(n) = gauss.matrix(n, m);
  xbar.row(0) =
      (xbar.bottomRows(n).colwise().squaredNorm().array() + 1.0).sqrt();
  return xbar;
}

// Independent tail oracle: one-sided Jacobi SVD instead of the library's
// divide-and-conquer path.
double tail_energy(const Eigen::MatrixXd& x, Eigen::Index r) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
  const auto& sigma = svd.singularValues();
  double tail = 0.0;
  for (Eigen::Index k = r; k < sigma.size(); ++k) tail += sigma[k] * sigma[k];
  return tail;
}

}  // namespace

TEST_SUITE("svd") {

TEST_CASE("hand value: axis-aligned spectrum") {
  // Spatial block diag(3, 1): singular values 3 and 1 exactly.
  Eigen::MatrixXd xbar(3, 2);
  xbar << std::sqrt(10.0), std::sqrt(2.0), 3.0, 0.0, 0.0, 1.0;
  CHECK(best_rank_r_error(xbar, 0) == 10.0);
  CHECK(best_rank_r_error(xbar, 1) == 1.0);
  CHECK(best_rank_r_error(xbar, 2) == 0.0);

  FactoredEmbedding f = solve_svd(xbar, 1);
  CHECK(f.U.rows() == 2);
  CHECK(f.U.cols() == 1);
  // Dominant direction is e1, sign fixed positive.
  CHECK(std::abs(f.U(0, 0) - 1.0) < 1e-14);
  CHECK(std::abs(f.U(1, 0)) < 1e-14);
  CHECK(std::abs(f.Z(0, 0) - 3.0) < 1e-13);
  CHECK(std::abs(f.Z(0, 1)) < 1e-13);
  CHECK(std::abs(f.z0[0] - std::sqrt(10.0)) < 1e-13);
  CHECK(std::abs(f.z0[1] - 1.0) < 1e-13);
}

TEST_CASE("exactly low-rank data is recovered to machine precision") {
  GaussianSampler gauss(1);
  Eigen::MatrixXd xbar(9, 11);
  xbar.bottomRows(8) = gauss.matrix(8, 2) * gauss.matrix(2, 11);
  xbar.row(0) =
      (xbar.bottomRows(8).colwise().squaredNorm().array() + 1.0).sqrt();
  FactoredEmbedding f = solve_svd(xbar, 2);
  const double scale = xbar.bottomRows(8).squaredNorm();
  CHECK((expand(f).bottomRows(8) - xbar.bottomRows(8)).squaredNorm() <
        1e-24 * scale * scale + 1e-24);
  CHECK(loss_value(LossKind::SpatialEuclidean, to_product_point(f), xbar) <
        1e-20 * scale);
}

TEST_CASE("factorization loss equals the singular-value tail") {
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd xbar = random_hyperboloid_data(12, 15, 100 + trial);
    for (Eigen::Index r : {1, 3, 7, 12}) {
      FactoredEmbedding f = solve_svd(xbar, r);
      const double loss =
          loss_value(LossKind::SpatialEuclidean, to_product_point(f), xbar);
      const double tail = tail_energy(xbar.bottomRows(12), r);
      CHECK(std::abs(loss - tail) < 1e-9 * std::max(1.0, tail));
      CHECK(best_rank_r_error(xbar, r) ==
            doctest::Approx(tail).epsilon(1e-9));
    }
  }
}

TEST_CASE("no rank-r frame beats the closed-form spatial loss") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(10, 14, 7);
  const Eigen::Index r = 3;
  const double floor = best_rank_r_error(xbar, r);
  const auto x = xbar.bottomRows(10);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::MatrixXd u = random_stiefel(10, r, 300 + trial).matrix();
    const double competitor = (x - u * (u.transpose() * x)).squaredNorm();
    CHECK(competitor >= floor - 1e-8);
  }
}

TEST_CASE("output satisfies every factored-embedding invariant") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(8, 10, 8);
  FactoredEmbedding f = solve_svd(xbar, 4);
  CHECK_NOTHROW(validate_factored(f));
  CHECK(stiefel_defect(f.U) < 1e-13);
  CHECK((f.Z - f.U.transpose() * xbar.bottomRows(8)).norm() == 0.0);
  CHECK(f.labels.empty());
}

TEST_CASE("sign convention is stable under data negation") {
  // Left singular vectors are defined only up to sign; the convention must
  // pick the same representative whichever sign the factorization happens
  // to produce.
  GaussianSampler gauss(9);
  Eigen::MatrixXd x = gauss.matrix(7, 9);
  Eigen::MatrixXd u_pos = detail::top_left_singular_vectors(x, 3);
  Eigen::MatrixXd u_neg = detail::top_left_singular_vectors(-x, 3);
  CHECK((u_pos - u_neg).norm() < 1e-12);
  for (Eigen::Index j = 0; j < u_pos.cols(); ++j) {
    Eigen::Index pivot = 0;
    u_pos.col(j).cwiseAbs().maxCoeff(&pivot);
    CHECK(u_pos(pivot, j) > 0.0);
  }
}

TEST_CASE("repeated runs are bit-identical") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(11, 9, 10);
  FactoredEmbedding a = solve_svd(xbar, 5);
  FactoredEmbedding b = solve_svd(xbar, 5);
  CHECK((a.U - b.U).norm() == 0.0);
  CHECK((a.Z - b.Z).norm() == 0.0);
  CHECK((a.z0 - b.z0).norm() == 0.0);
}

TEST_CASE("basis completion covers ranks past the data rank") {
  GaussianSampler gauss(11);
  Eigen::MatrixXd x = gauss.matrix(6, 2);  // at most 2 singular vectors
  Eigen::MatrixXd u = detail::top_left_singular_vectors(x, 5);
  CHECK(u.rows() == 6);
  CHECK(u.cols() == 5);
  CHECK(stiefel_defect(u) < 1e-13);
  // The leading columns still span the data.
  CHECK((x - u.leftCols(2) * (u.leftCols(2).transpose() * x)).norm() <
        1e-12 * x.norm());
  Eigen::MatrixXd again = detail::top_left_singular_vectors(x, 5);
  CHECK((u - again).norm() == 0.0);
}

TEST_CASE("all-origin data factors to the zero coefficient matrix") {
  Eigen::MatrixXd xbar = Eigen::MatrixXd::Zero(5, 3);
  xbar.row(0).setOnes();
  FactoredEmbedding f = solve_svd(xbar, 2);
  CHECK_NOTHROW(validate_factored(f));
  CHECK(f.Z.norm() == 0.0);
  CHECK((f.z0.array() - 1.0).abs().maxCoeff() == 0.0);
}

TEST_CASE("rank bounds and constraint violations are rejected") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(6, 4, 12);
  CHECK_THROWS_AS(solve_svd(xbar, 0), InvalidArgument);
  CHECK_THROWS_AS(solve_svd(xbar, 5), InvalidArgument);  // min(n, m) = 4
  CHECK_THROWS_AS(best_rank_r_error(xbar, -1), InvalidArgument);
  CHECK_THROWS_AS(best_rank_r_error(xbar, 7), InvalidArgument);
  CHECK_THROWS_AS(best_rank_r_error(Eigen::MatrixXd::Ones(1, 3), 0),
                  DimensionError);
  Eigen::MatrixXd off = xbar;
  off(0, 1) = -off(0, 1);
  CHECK_THROWS_AS(solve_svd(off, 2), ConstraintViolation);
  CHECK_THROWS_AS(detail::top_left_singular_vectors(xbar.bottomRows(6), 0),
                  InvalidArgument);
}

TEST_CASE("tail error is monotone in rank and exhausts at full rank") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(7, 9, 13);
  double prev = best_rank_r_error(xbar, 0);
  CHECK(prev == doctest::Approx(xbar.bottomRows(7).squaredNorm())
                    .epsilon(1e-12));
  for (Eigen::Index r = 1; r <= 7; ++r) {
    const double cur = best_rank_r_error(xbar, r);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
  CHECK(best_rank_r_error(xbar, 7) == 0.0);
}

}  // TEST_SUITE
