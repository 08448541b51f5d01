#include <Eigen/Dense>

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "hyperlore/losses.hpp"
#include "hyperlore/product.hpp"
#include "hyperlore/random.hpp"
#include "hyperlore/solver.hpp"
#include "hyperlore/svd.hpp"

using namespace hyperlore;

namespace {

Eigen::MatrixXd random_hyperboloid_data(Eigen::Index n, Eigen::Index m,
                                        std::uint64_t seed,
                                        double scale = 1.0) {
  GaussianSampler gauss(seed);
  Eigen::MatrixXd xbar(n + 1, m);
  xbar.bottomRows(n) = scale * gauss.matrix(n, m);
  xbar.row(0) =
      (xbar.bottomRows(n).colwise().squaredNorm().array() + 1.0).sqrt();
  return xbar;
}

ProductTangent random_tangent(const ProductPoint& y, std::uint64_t seed) {
  GaussianSampler gauss(seed);
  ProductDirection ambient{gauss.matrix(y.n(), y.r()),
                           gauss.matrix(y.r() + 1, y.m())};
  ProductTangent xi = product_project(y, ambient);
  const double norm = std::sqrt(product_metric(y, xi, xi));
  xi *= 1.0 / norm;
  return xi;
}

const LossKind kAllKinds[] = {LossKind::SpatialEuclidean,
                              LossKind::FullEuclidean,
                              LossKind::HyperbolicDistance};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("config validation rejects each bad field") {
  CHECK_NOTHROW(validate(TrConfig{}));
  TrConfig cfg;
  cfg.max_outer_iters = 0;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = TrConfig{};
  cfg.grad_tol = 0.0;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = TrConfig{};
  cfg.initial_radius = -1.0;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = TrConfig{};
  cfg.initial_radius = 200.0;  // exceeds default max_radius
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = TrConfig{};
  cfg.accept_threshold = 0.25;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = TrConfig{};
  cfg.tcg_max_iters = 0;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = TrConfig{};
  cfg.tcg_kappa = 0.0;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = TrConfig{};
  cfg.tcg_theta = 1.5;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
}

TEST_CASE("riemannian gradient is tangent and metric-compatible") {
  // Directional-derivative identity along retraction curves:
  // (f(R_y(t xi)) - f(R_y(-t xi))) / 2t -> g(grad f, xi).
  const Eigen::Index n = 10, m = 8, r = 2;
  Eigen::MatrixXd xbar = random_hyperboloid_data(n, m, 1);
  ProductPoint y = initialize(xbar, r, InitStrategy::Random, 2);
  const double t = 1e-6;
  for (LossKind kind : kAllKinds) {
    ProductTangent grad = riemannian_gradient(kind, y, xbar);
    CHECK_NOTHROW(validate_product_tangent(y, grad));
    for (int trial = 0; trial < 8; ++trial) {
      ProductTangent xi = random_tangent(y, 100 + trial);
      const double fp = loss_value(kind, product_retract(y, t * xi), xbar);
      const double fm =
          loss_value(kind, product_retract(y, -t * xi), xbar);
      const double fd = (fp - fm) / (2.0 * t);
      const double analytic = product_metric(y, grad, xi);
      CHECK(std::abs(fd - analytic) <
            1e-5 * std::max(1.0, std::abs(analytic)));
    }
  }
}

TEST_CASE("riemannian gradient vanishes at an exact reconstruction") {
  GaussianSampler gauss(3);
  Eigen::MatrixXd xbar(8, 9);
  xbar.bottomRows(7) = gauss.matrix(7, 2) * gauss.matrix(2, 9);
  xbar.row(0) =
      (xbar.bottomRows(7).colwise().squaredNorm().array() + 1.0).sqrt();
  ProductPoint y = initialize(xbar, 2, InitStrategy::SvdWarm, 0);
  for (LossKind kind : kAllKinds) {
    ProductTangent grad = riemannian_gradient(kind, y, xbar);
    CHECK(std::sqrt(product_metric(y, grad, grad)) < 1e-10);
  }
}

TEST_CASE("riemannian hessian is tangent, linear, and g-symmetric") {
  const Eigen::Index n = 9, m = 7, r = 2;
  Eigen::MatrixXd xbar = random_hyperboloid_data(n, m, 4);
  ProductPoint y = initialize(xbar, r, InitStrategy::Random, 5);
  for (LossKind kind : kAllKinds) {
    ProductTangent a = random_tangent(y, 200);
    ProductTangent b = random_tangent(y, 201);
    ProductTangent ha = riemannian_hessian_vec(kind, y, xbar, a);
    CHECK_NOTHROW(validate_product_tangent(y, ha));
    ProductTangent combined =
        riemannian_hessian_vec(kind, y, xbar, 2.0 * a + (-3.0) * b);
    ProductTangent split = 2.0 * ha +
                           (-3.0) * riemannian_hessian_vec(kind, y, xbar, b);
    CHECK((combined.U - split.U).norm() +
              (combined.Zbar - split.Zbar).norm() <
          1e-10 * std::max(1.0, split.U.norm() + split.Zbar.norm()));
    const double hab = product_metric(y, ha, b);
    const double hba =
        product_metric(y, a, riemannian_hessian_vec(kind, y, xbar, b));
    CHECK(std::abs(hab - hba) < 1e-7 * std::max(1.0, std::abs(hab)));
  }
}

TEST_CASE("hessian matches the second derivative along retraction curves") {
  // f(R_y(t xi)) - 2 f(y) + f(R_y(-t xi)) over t^2 approximates
  // g(H[xi], xi) with a symmetric-difference error of order t^2.
  const Eigen::Index n = 8, m = 6, r = 2;
  Eigen::MatrixXd xbar = random_hyperboloid_data(n, m, 6);
  ProductPoint y = initialize(xbar, r, InitStrategy::Random, 7);
  const double t = 1e-3;
  for (LossKind kind : kAllKinds) {
    const double f0 = loss_value(kind, y, xbar);
    for (int trial = 0; trial < 5; ++trial) {
      ProductTangent xi = random_tangent(y, 300 + trial);
      ProductTangent hxi = riemannian_hessian_vec(kind, y, xbar, xi);
      const double quad = product_metric(y, xi, hxi);
      const double fp = loss_value(kind, product_retract(y, t * xi), xbar);
      const double fm = loss_value(kind, product_retract(y, -t * xi), xbar);
      const double fd = (fp - 2.0 * f0 + fm) / (t * t);
      CHECK(std::abs(fd - quad) < 1e-4 * std::max(1.0, std::abs(quad)));
    }
  }
}

TEST_CASE("already-optimal starts stop before the first iteration") {
  GaussianSampler gauss(8);
  Eigen::MatrixXd xbar(9, 10);
  xbar.bottomRows(8) = gauss.matrix(8, 2) * gauss.matrix(2, 10);
  xbar.row(0) =
      (xbar.bottomRows(8).colwise().squaredNorm().array() + 1.0).sqrt();
  ProductPoint y0 = initialize(xbar, 2, InitStrategy::SvdWarm, 0);
  for (LossKind kind : kAllKinds) {
    auto [f, report] = tr_solve(kind, xbar, 2, y0, TrConfig{});
    CHECK(report.iterates == 0);
    CHECK(report.loss_trace.size() == 1);
    CHECK(report.accepted_flags.empty());
    CHECK(report.final_loss < 1e-12);
    CHECK(report.final_grad_norm < 1e-6);
    CHECK((f.U - y0.U).norm() == 0.0);
  }
}

TEST_CASE("accepted-loss trace is non-increasing and internally consistent") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(10, 8, 9);
  for (LossKind kind : kAllKinds) {
    ProductPoint y0 = initialize(xbar, 3, InitStrategy::Random, 10);
    TrConfig cfg;
    cfg.max_outer_iters = 60;
    auto [f, report] = tr_solve(kind, xbar, 3, y0, cfg);
    REQUIRE(report.loss_trace.size() ==
            static_cast<std::size_t>(report.iterates) + 1);
    REQUIRE(report.accepted_flags.size() ==
            static_cast<std::size_t>(report.iterates));
    for (std::size_t k = 0; k + 1 < report.loss_trace.size(); ++k) {
      CHECK(report.loss_trace[k + 1] <= report.loss_trace[k]);
      if (!report.accepted_flags[k])
        CHECK(report.loss_trace[k + 1] == report.loss_trace[k]);
    }
    CHECK(report.final_loss == report.loss_trace.back());
    CHECK(report.final_loss < report.loss_trace.front());
    CHECK(std::isfinite(report.final_grad_norm));
    CHECK_NOTHROW(validate_factored(f));
  }
}

TEST_CASE("trust-region solution respects the closed-form spatial floor") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(12, 10, 11);
  const Eigen::Index r = 2;
  ProductPoint y0 = initialize(xbar, r, InitStrategy::SvdWarm, 0);
  TrConfig cfg;
  cfg.max_outer_iters = 200;
  auto [f, report] = tr_solve(LossKind::FullEuclidean, xbar, r, y0, cfg);
  const double floor = best_rank_r_error(xbar, r);
  const double spatial =
      (xbar.bottomRows(12) - f.U * f.Z).squaredNorm();
  CHECK(spatial >= floor - 1e-8);
  // The svd-warm start is already spatially optimal, so the total loss can
  // only improve through the time row.
  CHECK(report.final_loss <= report.loss_trace.front());
}

TEST_CASE("identical inputs give identical reports and factors") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(9, 7, 12);
  ProductPoint y0 = initialize(xbar, 2, InitStrategy::Random, 13);
  TrConfig cfg;
  cfg.max_outer_iters = 40;
  for (LossKind kind : kAllKinds) {
    auto [fa, ra] = tr_solve(kind, xbar, 2, y0, cfg);
    auto [fb, rb] = tr_solve(kind, xbar, 2, y0, cfg);
    CHECK(ra.iterates == rb.iterates);
    CHECK(ra.final_loss == rb.final_loss);
    CHECK(ra.final_grad_norm == rb.final_grad_norm);
    CHECK(ra.loss_trace == rb.loss_trace);
    CHECK(ra.accepted_flags == rb.accepted_flags);
    CHECK((fa.U - fb.U).norm() == 0.0);
    CHECK((fa.Z - fb.Z).norm() == 0.0);
    CHECK((fa.z0 - fb.z0).norm() == 0.0);
  }
}

TEST_CASE("trace sink receives one well-formed line per iteration") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(8, 6, 14);
  ProductPoint y0 = initialize(xbar, 2, InitStrategy::Random, 15);
  TrConfig cfg;
  cfg.max_outer_iters = 25;
  std::vector<std::string> lines;
  auto [f, report] =
      tr_solve(LossKind::HyperbolicDistance, xbar, 2, y0, cfg,
               [&lines](const std::string& line) { lines.push_back(line); });
  REQUIRE(lines.size() == static_cast<std::size_t>(report.iterates));
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::vector<std::string> fields = split_fields(lines[k]);
    REQUIRE(fields.size() == 6);
    CHECK(fields[0] == std::to_string(k));
    CHECK(std::stod(fields[1]) == doctest::Approx(report.loss_trace[k + 1])
                                      .epsilon(1e-9));
    CHECK(std::stod(fields[2]) >= 0.0);
    CHECK(std::stod(fields[3]) > 0.0);
    const bool accepted = fields[5] == "1";
    CHECK(fields[5] == (report.accepted_flags[k] ? "1" : "0"));
    if (accepted) CHECK(std::stod(fields[4]) > 0.0);
  }
}

TEST_CASE("iteration budget and gradient tolerance are both honored") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(8, 6, 16);
  ProductPoint y0 = initialize(xbar, 2, InitStrategy::Random, 17);
  TrConfig one;
  one.max_outer_iters = 1;
  auto [f1, r1] = tr_solve(LossKind::FullEuclidean, xbar, 2, y0, one);
  CHECK(r1.iterates <= 1);

  TrConfig loose;
  loose.grad_tol = 1e12;  // starting gradient already below tolerance
  auto [f2, r2] = tr_solve(LossKind::FullEuclidean, xbar, 2, y0, loose);
  CHECK(r2.iterates == 0);
  CHECK((f2.U - y0.U).norm() == 0.0);
}

TEST_CASE("invalid starting points are rejected") {
  Eigen::MatrixXd xbar = random_hyperboloid_data(7, 5, 18);
  ProductPoint y0 = initialize(xbar, 2, InitStrategy::Random, 19);
  CHECK_THROWS_AS(tr_solve(LossKind::FullEuclidean, xbar, 3, y0, TrConfig{}),
                  InvalidArgument);
  ProductPoint crooked = y0;
  crooked.U *= 1.01;
  CHECK_THROWS_AS(
      tr_solve(LossKind::FullEuclidean, xbar, 2, crooked, TrConfig{}),
      ConstraintViolation);
  TrConfig bad;
  bad.grad_tol = -1.0;
  CHECK_THROWS_AS(tr_solve(LossKind::FullEuclidean, xbar, 2, y0, bad),
                  InvalidArgument);
}

TEST_CASE("ten consecutive non-finite trials abort with a diagnostic") {
  // A trust region pinned at radius 1e9 sends every trial step far enough
  // that cosh overflows in the hyperbolic retraction; the radius decays by
  // 4x per rejection but stays beyond the overflow threshold for more than
  // ten iterations. Frozen seeds: data stream 0, starting point stream 3.
  Eigen::MatrixXd xbar = random_hyperboloid_data(8, 7, 0, 40.0);
  ProductPoint y0 = initialize(xbar, 2, InitStrategy::Random, 3);
  TrConfig cfg;
  cfg.initial_radius = 1e9;
  cfg.max_radius = 1e9;
  cfg.max_outer_iters = 40;
  CHECK_THROWS_AS(
      tr_solve(LossKind::HyperbolicDistance, xbar, 2, y0, cfg),
      NumericError);
}

TEST_CASE("finite stagnation is not an error") {
  // Same pathological radius, but a different starting point survives the
  // early rejections; the solver must then run its budget out normally even
  // though late iterations stop producing model decrease.
  Eigen::MatrixXd xbar = random_hyperboloid_data(8, 7, 0, 40.0);
  ProductPoint y0 = initialize(xbar, 2, InitStrategy::Random, 0);
  TrConfig cfg;
  cfg.initial_radius = 1e9;
  cfg.max_radius = 1e9;
  cfg.max_outer_iters = 40;
  auto [f, report] =
      tr_solve(LossKind::HyperbolicDistance, xbar, 2, y0, cfg);
  CHECK(report.iterates == 40);
  for (std::size_t k = 0; k + 1 < report.loss_trace.size(); ++k)
    CHECK(report.loss_trace[k + 1] <= report.loss_trace[k]);
}

TEST_CASE("per-iteration cost probe returns a sane timing") {
  const double t = per_iteration_cost_probe(30, 40, 3,
                                            LossKind::HyperbolicDistance);
  CHECK(t > 0.0);
  CHECK(t < 1.0);
  const double t2 = per_iteration_cost_probe(30, 40, 3,
                                             LossKind::SpatialEuclidean);
  CHECK(t2 > 0.0);
}

}  // TEST_SUITE
