#include "hyperlore/losses.hpp"

#include <cmath>
#include <utility>

#include "hyperlore/hyperbolic.hpp"

namespace hyperlore {

namespace {

// Below this distance-argument excess the closed forms for phi'(c) and
// phi''(c), phi = acosh(c)^2, are evaluated by series: both are 0/0 at c = 1
// and lose all digits to cancellation just above it.
constexpr double kSeriesThreshold = 1e-8;

// phi'(c) = 2 acosh(c) / sqrt(c^2 - 1); series 2(1 - e/3 + ...) at e = c - 1.
double acosh_sq_d1(double c) {
  const double e = c - 1.0;
  if (e < kSeriesThreshold) return 2.0 * (1.0 - e / 3.0);
  const double s = std::sqrt(c * c - 1.0);
  return 2.0 * std::acosh(c) / s;
}

// phi''(c) = 2/(c^2-1) - 2c*acosh(c)/(c^2-1)^{3/2};
// series -2/3 + 8e/15 + ... at e = c - 1.
double acosh_sq_d2(double c) {
  const double e = c - 1.0;
  if (e < kSeriesThreshold) return -2.0 / 3.0 + 8.0 * e / 15.0;
  const double sq = c * c - 1.0;
  return 2.0 / sq - 2.0 * c * std::acosh(c) / (sq * std::sqrt(sq));
}

void require_compatible(const ProductPoint& y, const Eigen::MatrixXd& Xbar,
                        const char* where) {
  if (Xbar.rows() != y.n() + 1 || Xbar.cols() != y.m())
    throw DimensionError(std::string(where) + ": Xbar is " +
                         std::to_string(Xbar.rows()) + "x" +
                         std::to_string(Xbar.cols()) + " but the iterate has n = " +
                         std::to_string(y.n()) + ", m = " +
                         std::to_string(y.m()));
  if (y.Zbar.rows() != y.r() + 1)
    throw DimensionError(std::string(where) + ": Zbar must have r+1 rows");
}

}  // namespace

const char* method_name(LossKind kind) {
  switch (kind) {
    case LossKind::SpatialEuclidean: return "svd";
    case LossKind::FullEuclidean: return "euclid-full";
    case LossKind::HyperbolicDistance: return "hyperbolic";
  }
  throw InvalidArgument("method_name: unknown loss kind");
}

LossKind method_from_name(const std::string& name) {
  if (name == "svd") return LossKind::SpatialEuclidean;
  if (name == "euclid-full") return LossKind::FullEuclidean;
  if (name == "hyperbolic") return LossKind::HyperbolicDistance;
  throw InvalidArgument("unknown method '" + name +
                        "' (expected svd, euclid-full, or hyperbolic)");
}

LossTerms::LossTerms(LossKind kind, ProductPoint y,
                     const Eigen::MatrixXd& Xbar)
    : kind_(kind), y_(std::move(y)), Xbar_(&Xbar) {
  require_compatible(y_, Xbar, "LossTerms");
  const Eigen::Index n = y_.n();
  const Eigen::Index r = y_.r();
  const auto X = Xbar.bottomRows(n);
  const auto Z = y_.Zbar.bottomRows(r);

  gradient_.U.resize(n, r);
  gradient_.Zbar.resize(r + 1, y_.m());

  if (kind == LossKind::HyperbolicDistance) {
    require_hyperboloid_columns(Xbar, "LossTerms");
    projected_.noalias() = y_.U.transpose() * X;  // U^T x_i per column
    // c_i = -<xbar_i, zhat_i>_L = x0_i z0_i - (U^T x_i) . z_i, clamped to 1.
    Eigen::RowVectorXd c =
        Xbar.row(0).cwiseProduct(y_.Zbar.row(0)) -
        projected_.cwiseProduct(Z).colwise().sum();
    weight_.resize(c.size());
    curvature_.resize(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double ci = std::max(c[i], 1.0);
      const double d = std::acosh(ci);
      value_ += d * d;
      weight_[i] = acosh_sq_d1(ci);
      curvature_[i] = acosh_sq_d2(ci);
    }
    // dc_i/dU = -x_i z_i^T, dc_i/dz_i = -U^T x_i, dc_i/dz0_i = x0_i.
    gradient_.U.noalias() = -X * (Z * weight_.asDiagonal()).transpose();
    gradient_.Zbar.row(0) = weight_.transpose().cwiseProduct(Xbar.row(0));
    gradient_.Zbar.bottomRows(r) = -projected_ * weight_.asDiagonal();
    return;
  }

  residual_ = X - y_.U * Z;
  value_ = residual_.squaredNorm();
  gradient_.U.noalias() = -2.0 * residual_ * Z.transpose();
  gradient_.Zbar.bottomRows(r).noalias() =
      -2.0 * (y_.U.transpose() * residual_);
  if (kind == LossKind::FullEuclidean) {
    value_ += (Xbar.row(0) - y_.Zbar.row(0)).squaredNorm();
    gradient_.Zbar.row(0) = 2.0 * (y_.Zbar.row(0) - Xbar.row(0));
  } else {
    gradient_.Zbar.row(0).setZero();
  }
}

AmbientGradient LossTerms::hessian_vec(const ProductDirection& xi) const {
  if (xi.U.rows() != y_.n() || xi.U.cols() != y_.r() ||
      xi.Zbar.rows() != y_.r() + 1 || xi.Zbar.cols() != y_.m())
    throw DimensionError("hessian_vec: direction shape mismatch");
  const Eigen::Index n = y_.n();
  const Eigen::Index r = y_.r();
  const auto X = Xbar_->bottomRows(n);
  const auto Z = y_.Zbar.bottomRows(r);
  const auto xiZ = xi.Zbar.bottomRows(r);

  AmbientGradient h;
  h.U.resize(n, r);
  h.Zbar.resize(r + 1, y_.m());

  if (kind_ == LossKind::HyperbolicDistance) {
    // Dc_i = x0_i xi0_i - (xiU^T x_i).z_i - (U^T x_i).xiz_i, and every second
    // derivative of f is wp_i Dc_i(.)Dc_i(.) plus w_i times the bilinear part
    // of c.
    Eigen::MatrixXd q;
    q.noalias() = xi.U.transpose() * X;  // xiU^T x_i per column
    Eigen::RowVectorXd dc = Xbar_->row(0).cwiseProduct(xi.Zbar.row(0)) -
                            q.cwiseProduct(Z).colwise().sum() -
                            projected_.cwiseProduct(xiZ).colwise().sum();
    Eigen::VectorXd dw = curvature_.cwiseProduct(dc.transpose());
    h.U.noalias() =
        -X * (Z * dw.asDiagonal() + xiZ * weight_.asDiagonal()).transpose();
    h.Zbar.row(0) = dw.transpose().cwiseProduct(Xbar_->row(0));
    h.Zbar.bottomRows(r) =
        -projected_ * dw.asDiagonal() - q * weight_.asDiagonal();
    return h;
  }

  Eigen::MatrixXd de;
  de.noalias() = xi.U * Z;
  de.noalias() += y_.U * xiZ;  // DE = -(xiU Z + U xiZ), sign folded below
  h.U.noalias() = 2.0 * (de * Z.transpose() - residual_ * xiZ.transpose());
  h.Zbar.bottomRows(r).noalias() =
      2.0 * (y_.U.transpose() * de - xi.U.transpose() * residual_);
  if (kind_ == LossKind::FullEuclidean)
    h.Zbar.row(0) = 2.0 * xi.Zbar.row(0);
  else
    h.Zbar.row(0).setZero();
  return h;
}

double loss_value(LossKind kind, const ProductPoint& y,
                  const Eigen::MatrixXd& Xbar) {
  return LossTerms(kind, y, Xbar).value();
}

AmbientGradient euclidean_gradient(LossKind kind, const ProductPoint& y,
                                   const Eigen::MatrixXd& Xbar) {
  return LossTerms(kind, y, Xbar).gradient();
}

AmbientGradient euclidean_hessian_vec(LossKind kind, const ProductPoint& y,
                                      const Eigen::MatrixXd& Xbar,
                                      const ProductDirection& xi) {
  return LossTerms(kind, y, Xbar).hessian_vec(xi);
}

}  // namespace hyperlore
