#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <utility>

#include "hyperlore/errors.hpp"

namespace hyperlore {

// Tolerance for manifold-membership and tangency checks. Hyperboloid checks
// scale it by the time coordinate (see hyperboloid_defect below); everything
// near the base point sees it as an absolute tolerance.
inline constexpr double kConstraintTol = 1e-9;
// Poincare validity: reject Euclidean norm >= 1 - kBallMargin. A hard margin
// below 1 keeps file round-trip noise from producing infinite distances.
inline constexpr double kBallMargin = 1e-12;
// Lorentz norms below this count as zero in the retraction; the first-order
// term of the geodesic is below round-off there.
inline constexpr double kRetractionZero = 1e-14;

namespace detail {

inline void require_same_length(Eigen::Index a, Eigen::Index b,
                                const char* where) {
  if (a != b)
    throw DimensionError(std::string(where) + ": length mismatch (" +
                         std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lorentz algebra on raw coordinate vectors. These are the hot-path kernels:
// they check shapes but trust the caller on manifold membership. The typed
// wrappers below carry validity as a class invariant instead.
// ---------------------------------------------------------------------------

// <a,b>_L = -a0*b0 + sum_{k>=1} a_k*b_k on ambient vectors of length n+1.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar lorentz_inner(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  detail::require_same_length(a.size(), b.size(), "lorentz_inner");
  if (a.size() < 2)
    throw DimensionError("lorentz_inner: vectors must have length >= 2");
  return -a[0] * b[0] + a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

// Multiplication by the Lorentz form L = diag(-1, 1, ..., 1).
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> lorentz_apply(
    const Eigen::MatrixBase<Derived>& v) {
  Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> out = v;
  out[0] = -out[0];
  return out;
}

// Distance of v from the upper hyperboloid sheet, measured as the defect of
// x0 = sqrt(1 + ||x||^2). This restatement replaces |<v,v>_L + 1|, which
// loses ~eps * x0^2 to cancellation and would reject perfectly good far-out
// points.
template <typename Derived>
typename Derived::Scalar hyperboloid_defect(
    const Eigen::MatrixBase<Derived>& v) {
  using std::abs;
  using std::sqrt;
  using Scalar = typename Derived::Scalar;
  return abs(v[0] - sqrt(Scalar(1) + v.tail(v.size() - 1).squaredNorm()));
}

template <typename Derived>
bool is_on_hyperboloid(const Eigen::MatrixBase<Derived>& v,
                       double tol = kConstraintTol) {
  if (v.size() < 2) return false;
  if (!(v[0] > 0)) return false;  // also rejects NaN time coordinate
  const double defect = static_cast<double>(hyperboloid_defect(v));
  return defect <= tol * std::max(1.0, static_cast<double>(v[0]));
}

template <typename Derived>
void require_hyperboloid(const Eigen::MatrixBase<Derived>& v,
                         const std::string& what) {
  if (v.size() < 2)
    throw DimensionError(what + ": hyperboloid points need length >= 2");
  if (!(v[0] > 0))
    throw ConstraintViolation(what + ": time coordinate must be positive, got " +
                              std::to_string(static_cast<double>(v[0])));
  const double defect = static_cast<double>(hyperboloid_defect(v));
  if (!(defect <= kConstraintTol * std::max(1.0, static_cast<double>(v[0]))))
    throw ConstraintViolation(what + ": point is off the hyperboloid sheet (defect " +
                              std::to_string(defect) + ")");
}

template <typename Derived>
bool in_poincare_ball(const Eigen::MatrixBase<Derived>& w) {
  return w.size() >= 1 && w.allFinite() && w.norm() < 1.0 - kBallMargin;
}

// ---------------------------------------------------------------------------
// Validated value types.
// ---------------------------------------------------------------------------

// Point on the upper sheet of the unit hyperboloid in R^{n+1}:
// <p,p>_L = -1 and p[0] > 0, stored as [x0; x] with x in R^n.
class HyperboloidPoint {
 public:
  explicit HyperboloidPoint(Eigen::VectorXd coords)
      : coords_(std::move(coords)) {
    require_hyperboloid(coords_, "HyperboloidPoint");
  }

  // Manifold dimension n; the coordinate vector has n+1 entries.
  Eigen::Index dim() const { return coords_.size() - 1; }
  const Eigen::VectorXd& coords() const { return coords_; }
  double time() const { return coords_[0]; }
  auto spatial() const { return coords_.tail(coords_.size() - 1); }

 private:
  Eigen::VectorXd coords_;
};

// Point strictly inside the unit ball in R^n.
class PoincarePoint {
 public:
  explicit PoincarePoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
    if (coords_.size() < 1)
      throw DimensionError("PoincarePoint: empty coordinate vector");
    if (!coords_.allFinite())
      throw NumericError("PoincarePoint: non-finite coordinates");
    const double norm = coords_.norm();
    if (!(norm < 1.0 - kBallMargin))
      throw ConstraintViolation("PoincarePoint: norm " + std::to_string(norm) +
                                " is not strictly inside the unit ball");
  }

  Eigen::Index dim() const { return coords_.size(); }
  const Eigen::VectorXd& coords() const { return coords_; }

 private:
  Eigen::VectorXd coords_;
};

// Tangent vector at a hyperboloid point: <base, dir>_L = 0. The Lorentz
// product is positive semidefinite on tangent spaces, so <dir,dir>_L >= 0
// up to round-off.
class HyperbolicTangent {
 public:
  HyperbolicTangent(HyperboloidPoint base, Eigen::VectorXd dir)
      : base_(std::move(base)), dir_(std::move(dir)) {
    detail::require_same_length(base_.coords().size(), dir_.size(),
                                "HyperbolicTangent");
    const double scale =
        std::max(1.0, base_.coords().norm() * dir_.norm());
    const double pairing = lorentz_inner(base_.coords(), dir_);
    if (!(std::abs(pairing) <= kConstraintTol * scale))
      throw ConstraintViolation(
          "HyperbolicTangent: direction is not Lorentz-orthogonal to the base "
          "point (<base,dir>_L = " +
          std::to_string(pairing) + ")");
    const double sq = lorentz_inner(dir_, dir_);
    if (sq < -kConstraintTol * std::max(1.0, dir_.squaredNorm()))
      throw ConstraintViolation(
          "HyperbolicTangent: negative Lorentz self-product " +
          std::to_string(sq));
  }

  const HyperboloidPoint& base() const { return base_; }
  const Eigen::VectorXd& dir() const { return dir_; }
  // sqrt(<dir,dir>_L), clamped at zero for round-off.
  double lorentz_norm() const {
    return std::sqrt(std::max(0.0, lorentz_inner(dir_, dir_)));
  }

 private:
  HyperboloidPoint base_;
  Eigen::VectorXd dir_;
};

// ---------------------------------------------------------------------------
// Distances.
// ---------------------------------------------------------------------------

// arccosh(-<u,v>_L) with the argument clamped to >= 1: round-off can push it
// to 1 - eps for near-identical points, and the clamp turns that into
// distance 0 instead of a domain error.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar hyperboloid_distance(
    const Eigen::MatrixBase<DerivedA>& u,
    const Eigen::MatrixBase<DerivedB>& v) {
  using std::acosh;
  using Scalar = typename DerivedA::Scalar;
  const Scalar c = -lorentz_inner(u, v);
  return acosh(std::max(c, Scalar(1)));
}

inline double hyperboloid_distance(const HyperboloidPoint& u,
                                   const HyperboloidPoint& v) {
  detail::require_same_length(u.coords().size(), v.coords().size(),
                              "hyperboloid_distance");
  return hyperboloid_distance(u.coords(), v.coords());
}

// arccosh(1 + 2||u-v||^2 / ((1-||u||^2)(1-||v||^2))), argument clamped to 1.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar poincare_distance(
    const Eigen::MatrixBase<DerivedA>& u,
    const Eigen::MatrixBase<DerivedB>& v) {
  using std::acosh;
  using std::sqrt;
  using Scalar = typename DerivedA::Scalar;
  detail::require_same_length(u.size(), v.size(), "poincare_distance");
  const Scalar uu = u.squaredNorm();
  const Scalar vv = v.squaredNorm();
  if (!(sqrt(uu) < Scalar(1.0 - kBallMargin)))
    throw ConstraintViolation("poincare_distance: first point is not inside the unit ball");
  if (!(sqrt(vv) < Scalar(1.0 - kBallMargin)))
    throw ConstraintViolation("poincare_distance: second point is not inside the unit ball");
  const Scalar arg =
      Scalar(1) + Scalar(2) * (u - v).squaredNorm() / ((Scalar(1) - uu) * (Scalar(1) - vv));
  return acosh(std::max(arg, Scalar(1)));
}

inline double poincare_distance(const PoincarePoint& u,
                                const PoincarePoint& v) {
  return poincare_distance(u.coords(), v.coords());
}

// ---------------------------------------------------------------------------
// Model maps h and h^{-1} between the hyperboloid and the Poincare ball.
// ---------------------------------------------------------------------------

// h([x0; x]) = x / (x0 + 1).
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> hyperboloid_to_poincare(
    const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() < 2)
    throw DimensionError("hyperboloid_to_poincare: input needs length >= 2");
  return v.tail(v.size() - 1) / (v[0] + Scalar(1));
}

inline PoincarePoint hyperboloid_to_poincare(const HyperboloidPoint& u) {
  return PoincarePoint(hyperboloid_to_poincare(u.coords()));
}

// h^{-1}(w) = (1/(1-||w||^2)) * [1+||w||^2; 2w].
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> poincare_to_hyperboloid(
    const Eigen::MatrixBase<Derived>& w) {
  using std::sqrt;
  using Scalar = typename Derived::Scalar;
  const Scalar ww = w.squaredNorm();
  if (!(sqrt(ww) < Scalar(1.0 - kBallMargin)))
    throw ConstraintViolation(
        "poincare_to_hyperboloid: point is not strictly inside the unit ball");
  const Scalar scale = Scalar(1) / (Scalar(1) - ww);
  Eigen::Vector<Scalar, Eigen::Dynamic> out(w.size() + 1);
  out[0] = (Scalar(1) + ww) * scale;
  out.tail(w.size()) = (Scalar(2) * scale) * w;
  return out;
}

inline HyperboloidPoint poincare_to_hyperboloid(const PoincarePoint& w) {
  return HyperboloidPoint(poincare_to_hyperboloid(w.coords()));
}

// [sqrt(1+||x||^2); x]: the unique hyperboloid point above a spatial vector.
template <typename Derived>
HyperboloidPoint lift_to_hyperboloid(const Eigen::MatrixBase<Derived>& x) {
  if (!x.allFinite())
    throw NumericError("lift_to_hyperboloid: non-finite input");
  Eigen::VectorXd out(x.size() + 1);
  out[0] = std::sqrt(1.0 + static_cast<double>(x.squaredNorm()));
  out.tail(x.size()) = x.template cast<double>();
  return HyperboloidPoint(std::move(out));
}

// ---------------------------------------------------------------------------
// Tangent projection and retraction.
// ---------------------------------------------------------------------------

// Pi_zbar(zeta) = zeta + zbar * <zbar, zeta>_L: Lorentz-orthogonal projection
// onto the tangent space at zbar. Idempotent; annihilates the normal
// direction zbar itself.
template <typename DerivedZ, typename DerivedC>
Eigen::Vector<typename DerivedZ::Scalar, Eigen::Dynamic>
project_to_hyperbolic_tangent(const Eigen::MatrixBase<DerivedZ>& zbar,
                              const Eigen::MatrixBase<DerivedC>& zeta) {
  detail::require_same_length(zbar.size(), zeta.size(),
                              "project_to_hyperbolic_tangent");
  return zeta + zbar * lorentz_inner(zbar, zeta);
}

inline HyperbolicTangent project_to_hyperbolic_tangent(
    const HyperboloidPoint& zbar, const Eigen::VectorXd& zeta) {
  return HyperbolicTangent(zbar,
                           project_to_hyperbolic_tangent(zbar.coords(), zeta));
}

// Exponential-map retraction zbar*cosh(t) + xi*sinh(t)/t with t = ||xi||_L.
// Below kRetractionZero the series limit is the base point itself. The time
// coordinate is recomputed from the sheet equation when round-off drift
// exceeds tolerance, so long retraction chains cannot creep off the manifold.
template <typename DerivedZ, typename DerivedX>
Eigen::Vector<typename DerivedZ::Scalar, Eigen::Dynamic> hyperbolic_retract(
    const Eigen::MatrixBase<DerivedZ>& zbar,
    const Eigen::MatrixBase<DerivedX>& xi) {
  using std::cosh;
  using std::sinh;
  using std::sqrt;
  using Scalar = typename DerivedZ::Scalar;
  detail::require_same_length(zbar.size(), xi.size(), "hyperbolic_retract");
  const Scalar sq = lorentz_inner(xi, xi);
  if (sq < Scalar(-kConstraintTol) * std::max(Scalar(1), xi.squaredNorm()))
    throw ConstraintViolation(
        "hyperbolic_retract: direction is not tangent, <xi,xi>_L = " +
        std::to_string(static_cast<double>(sq)));
  const Scalar t = sqrt(std::max(sq, Scalar(0)));
  if (t < Scalar(kRetractionZero))
    return zbar;
  Eigen::Vector<Scalar, Eigen::Dynamic> out =
      zbar * cosh(t) + xi * (sinh(t) / t);
  const Scalar time = sqrt(Scalar(1) + out.tail(out.size() - 1).squaredNorm());
  if (std::isfinite(static_cast<double>(time)) &&
      std::abs(static_cast<double>(out[0] - time)) >
          kConstraintTol * std::max(1.0, static_cast<double>(time)))
    out[0] = time;
  return out;
}

inline HyperboloidPoint hyperbolic_retract(const HyperboloidPoint& zbar,
                                           const HyperbolicTangent& xi) {
  return HyperboloidPoint(hyperbolic_retract(zbar.coords(), xi.dir()));
}

}  // namespace hyperlore
