#include "hyperlore/product.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hyperlore/hyperbolic.hpp"
#include "hyperlore/stiefel.hpp"
#include "hyperlore/svd.hpp"

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

void require_conforming(const ProductPoint& y, const ProductDirection& d,
                        const char* where) {
  require_same_shape(y.U, d.U, where);
  require_same_shape(y.Zbar, d.Zbar, where);
}

std::string join_indices(const std::vector<Eigen::Index>& indices) {
  std::string out;
  for (std::size_t k = 0; k < indices.size() && k < 8; ++k) {
    if (k) out += ", ";
    out += std::to_string(indices[k]);
  }
  if (indices.size() > 8) out += ", ...";
  return out;
}

}  // namespace

ProductDirection ProductDirection::zero_like(const ProductPoint& y) {
  return {Eigen::MatrixXd::Zero(y.U.rows(), y.U.cols()),
          Eigen::MatrixXd::Zero(y.Zbar.rows(), y.Zbar.cols())};
}

ProductDirection& ProductDirection::operator+=(const ProductDirection& other) {
  U += other.U;
  Zbar += other.Zbar;
  return *this;
}

ProductDirection& ProductDirection::operator-=(const ProductDirection& other) {
  U -= other.U;
  Zbar -= other.Zbar;
  return *this;
}

ProductDirection& ProductDirection::operator*=(double s) {
  U *= s;
  Zbar *= s;
  return *this;
}

ProductDirection operator+(ProductDirection a, const ProductDirection& b) {
  a += b;
  return a;
}

ProductDirection operator-(ProductDirection a, const ProductDirection& b) {
  a -= b;
  return a;
}

ProductDirection operator*(double s, ProductDirection a) {
  a *= s;
  return a;
}

std::vector<Eigen::Index> bad_hyperboloid_columns(const Eigen::MatrixXd& Xbar) {
  std::vector<Eigen::Index> bad;
  for (Eigen::Index i = 0; i < Xbar.cols(); ++i)
    if (!is_on_hyperboloid(Xbar.col(i))) bad.push_back(i);
  return bad;
}

void require_hyperboloid_columns(const Eigen::MatrixXd& Xbar,
                                 const std::string& what) {
  if (Xbar.rows() < 2)
    throw DimensionError(what + ": hyperboloid columns need length >= 2");
  const std::vector<Eigen::Index> bad = bad_hyperboloid_columns(Xbar);
  if (!bad.empty())
    throw ConstraintViolation(what + ": " + std::to_string(bad.size()) +
                              " column(s) violate the hyperboloid constraint "
                              "(indices " +
                              join_indices(bad) + ")");
}

void validate_product_point(const ProductPoint& y) {
  if (y.Zbar.rows() != y.U.cols() + 1)
    throw DimensionError(
        "ProductPoint: Zbar must have r+1 rows, got " +
        std::to_string(y.Zbar.rows()) + " for r = " + std::to_string(y.r()));
  const double defect = stiefel_defect(y.U);
  if (!(defect < kConstraintTol))
    throw ConstraintViolation(
        "ProductPoint: U columns are not orthonormal (residual " +
        std::to_string(defect) + ")");
  require_hyperboloid_columns(y.Zbar, "ProductPoint");
}

void validate_product_tangent(const ProductPoint& y, const ProductTangent& xi) {
  require_conforming(y, xi, "validate_product_tangent");
  const double u_scale = std::max(1.0, xi.U.norm());
  const double u_defect = symm(y.U.transpose() * xi.U).norm();
  if (!(u_defect < kConstraintTol * u_scale))
    throw ConstraintViolation(
        "ProductTangent: U block is not tangent (||symm(U^T xi)||_F = " +
        std::to_string(u_defect) + ")");
  for (Eigen::Index i = 0; i < y.m(); ++i) {
    const double pairing = lorentz_inner(y.Zbar.col(i), xi.Zbar.col(i));
    const double scale =
        std::max(1.0, y.Zbar.col(i).norm() * xi.Zbar.col(i).norm());
    if (!(std::abs(pairing) <= kConstraintTol * scale))
      throw ConstraintViolation(
          "ProductTangent: column " + std::to_string(i) +
          " is not tangent (<zbar,xi>_L = " + std::to_string(pairing) + ")");
  }
}

void validate_factored(const FactoredEmbedding& f, bool require_labels) {
  if (f.U.rows() < f.U.cols() || f.U.cols() < 1)
    throw DimensionError("FactoredEmbedding: U must be n x r with 1 <= r <= n");
  if (f.Z.rows() != f.U.cols())
    throw DimensionError("FactoredEmbedding: Z must have r = " +
                         std::to_string(f.U.cols()) + " rows, got " +
                         std::to_string(f.Z.rows()));
  if (f.z0.size() != f.Z.cols())
    throw DimensionError("FactoredEmbedding: z0 length " +
                         std::to_string(f.z0.size()) + " does not match m = " +
                         std::to_string(f.Z.cols()));
  if (!f.labels.empty() &&
      static_cast<Eigen::Index>(f.labels.size()) != f.Z.cols())
    throw DimensionError("FactoredEmbedding: " +
                         std::to_string(f.labels.size()) +
                         " labels for m = " + std::to_string(f.Z.cols()) +
                         " columns");
  if (require_labels && f.labels.empty())
    throw InvalidArgument("FactoredEmbedding: labels are required here");
  const double u_defect = stiefel_defect(f.U);
  if (!(u_defect < kConstraintTol))
    throw ConstraintViolation(
        "FactoredEmbedding: U columns are not orthonormal (residual " +
        std::to_string(u_defect) + ")");
  for (Eigen::Index i = 0; i < f.Z.cols(); ++i) {
    const double time = std::sqrt(1.0 + f.Z.col(i).squaredNorm());
    if (!(std::abs(f.z0[i] - time) <=
          kConstraintTol * std::max(1.0, std::abs(f.z0[i]))))
      throw ConstraintViolation(
          "FactoredEmbedding: z0[" + std::to_string(i) +
          "] = " + std::to_string(f.z0[i]) +
          " does not match the hyperboloid constraint value " +
          std::to_string(time));
  }
}

Eigen::Index manifold_dimension(Eigen::Index n, Eigen::Index r,
                                Eigen::Index m) {
  return n * r - r * (r + 1) / 2 + m * r;
}

double product_metric(const ProductPoint& y, const ProductTangent& xi,
                      const ProductTangent& eta) {
  require_conforming(y, xi, "product_metric");
  require_conforming(y, eta, "product_metric");
  // Lorentz pairing over all columns at once: Euclidean elementwise sum minus
  // twice the time-row contribution.
  const double frob = xi.U.cwiseProduct(eta.U).sum();
  const double lorentz = xi.Zbar.cwiseProduct(eta.Zbar).sum() -
                         2.0 * xi.Zbar.row(0).dot(eta.Zbar.row(0));
  return frob + lorentz;
}

ProductTangent product_project(const ProductPoint& y,
                               const ProductDirection& ambient) {
  require_conforming(y, ambient, "product_project");
  ProductTangent out;
  out.U = project_to_stiefel_tangent(y.U, ambient.U);
  // c_i = <zbar_i, zeta_i>_L for every column, then zeta_i + zbar_i * c_i.
  Eigen::RowVectorXd c =
      y.Zbar.cwiseProduct(ambient.Zbar).colwise().sum() -
      2.0 * y.Zbar.row(0).cwiseProduct(ambient.Zbar.row(0));
  out.Zbar = ambient.Zbar + y.Zbar * c.asDiagonal();
  return out;
}

ProductPoint product_retract(const ProductPoint& y, const ProductTangent& xi) {
  require_conforming(y, xi, "product_retract");
  ProductPoint out;
  out.U = stiefel_retract(y.U, xi.U);
  out.Zbar.resize(y.Zbar.rows(), y.Zbar.cols());
  for (Eigen::Index i = 0; i < y.m(); ++i)
    out.Zbar.col(i) = hyperbolic_retract(y.Zbar.col(i), xi.Zbar.col(i));
  return out;
}

Eigen::MatrixXd expand(const FactoredEmbedding& f) {
  validate_factored(f);
  Eigen::MatrixXd out(f.U.rows() + 1, f.Z.cols());
  out.row(0) = f.z0.transpose();
  out.bottomRows(f.U.rows()).noalias() = f.U * f.Z;
  return out;
}

Eigen::MatrixXd expand(const ProductPoint& y) {
  Eigen::MatrixXd out(y.n() + 1, y.m());
  out.row(0) = y.Zbar.row(0);
  out.bottomRows(y.n()).noalias() = y.U * y.Z();
  return out;
}

FactoredEmbedding to_factored(const ProductPoint& y,
                              std::vector<std::string> labels) {
  FactoredEmbedding f;
  f.U = y.U;
  f.Z = y.Z();
  f.z0 = y.z0().transpose();
  f.labels = std::move(labels);
  return f;
}

ProductPoint to_product_point(const FactoredEmbedding& f) {
  validate_factored(f);
  ProductPoint y;
  y.U = f.U;
  y.Zbar.resize(f.Z.rows() + 1, f.Z.cols());
  y.Zbar.row(0) = f.z0.transpose();
  y.Zbar.bottomRows(f.Z.rows()) = f.Z;
  return y;
}

ProductPoint initialize(const Eigen::MatrixXd& Xbar, Eigen::Index r,
                        InitStrategy strategy, std::uint64_t seed) {
  const Eigen::Index n = Xbar.rows() - 1;
  if (r < 1 || r > n)
    throw InvalidArgument("initialize: need 1 <= r <= n, got r = " +
                          std::to_string(r) + ", n = " + std::to_string(n));
  require_hyperboloid_columns(Xbar, "initialize");
  const auto X = Xbar.bottomRows(n);

  ProductPoint y;
  y.U = strategy == InitStrategy::SvdWarm
            ? detail::top_left_singular_vectors(X, r)
            : random_stiefel(n, r, seed).matrix();
  y.Zbar.resize(r + 1, Xbar.cols());
  y.Zbar.bottomRows(r).noalias() = y.U.transpose() * X;
  y.Zbar.row(0) =
      (y.Zbar.bottomRows(r).colwise().squaredNorm().array() + 1.0).sqrt();
  return y;
}

}  // namespace hyperlore
