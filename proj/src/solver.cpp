#include "hyperlore/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "hyperlore/hyperbolic.hpp"
#include "hyperlore/random.hpp"
#include "hyperlore/stiefel.hpp"

namespace hyperlore {

namespace {

// Riemannian gradient from precomputed loss terms. The hyperbolic blocks of
// the ambient gradient are multiplied by L = diag(-1, 1, ..., 1) first: under
// the Lorentz metric that is exactly what makes g(grad f, xi) equal the
// directional derivative for every tangent xi.
ProductTangent rgrad(const LossTerms& terms) {
  ProductDirection amb;
  amb.U = terms.gradient().U;
  amb.Zbar = terms.gradient().Zbar;
  amb.Zbar.row(0) = -amb.Zbar.row(0);
  return product_project(terms.point(), amb);
}

// Derivative of the gradient field along tangent xi, projected back to the
// tangent space. Differentiating the projector itself contributes one
// correction term per factor:
//   Stiefel:    - xi_U * symm(U^T egrad_U)
//   hyperbolic: + xi_i * (zbar_i . egrad_i)   (Euclidean dot)
// everything else the projector kills exactly.
ProductTangent rhess(const LossTerms& terms, const ProductTangent& xi) {
  const ProductPoint& y = terms.point();
  const AmbientGradient ehess = terms.hessian_vec(xi);
  const AmbientGradient& egrad = terms.gradient();
  ProductDirection amb;
  amb.U = ehess.U - xi.U * symm(y.U.transpose() * egrad.U);
  amb.Zbar = ehess.Zbar;
  amb.Zbar.row(0) = -amb.Zbar.row(0);
  const Eigen::RowVectorXd pairing =
      y.Zbar.cwiseProduct(egrad.Zbar).colwise().sum();
  amb.Zbar += xi.Zbar * pairing.asDiagonal();
  return product_project(y, amb);
}

struct TcgResult {
  ProductTangent step;
  ProductTangent h_step;  // H applied to the step, tracked incrementally
  bool hit_boundary = false;
};

// Steihaug-Toint truncated conjugate gradients for
//   min_eta  g(grad, eta) + 1/2 g(eta, H eta)   s.t.  ||eta||_g <= radius.
// Negative curvature and boundary crossings move to the boundary along the
// current search direction; the interior stopping rule is
// ||r_j|| <= ||r0|| * min(kappa, ||r0||^theta).
TcgResult truncated_cg(const LossTerms& terms, const ProductTangent& grad,
                       double radius, int max_iters, double kappa,
                       double theta) {
  const ProductPoint& y = terms.point();
  TcgResult out{ProductTangent::zero_like(y), ProductTangent::zero_like(y),
                false};

  // Self-products under the Lorentz-indefinite form can evaluate to tiny
  // negatives once the residual is pure rounding noise; clamping keeps the
  // square roots real and turns that state into a clean interior stop.
  ProductTangent residual = grad;
  double rr = std::max(product_metric(y, residual, residual), 0.0);
  const double r0_norm = std::sqrt(rr);
  if (!(r0_norm > 0.0)) return out;
  const double target = r0_norm * std::min(kappa, std::pow(r0_norm, theta));

  ProductTangent dir = -1.0 * residual;
  // Inner products of the current step e and search direction d in the
  // product metric, tracked incrementally (the standard CG recurrences).
  double e_e = 0.0, e_d = 0.0, d_d = rr;
  const double radius_sq = radius * radius;

  for (int j = 0; j < max_iters; ++j) {
    const ProductTangent h_dir = rhess(terms, dir);
    const double curvature = product_metric(y, dir, h_dir);

    // Negative curvature makes the model unbounded along the direction; a
    // too-long step leaves the region. Both cases stop at the boundary. The
    // negated comparison also routes a non-finite e_e_next (overflow from a
    // near-zero curvature) to the boundary handling.
    bool to_boundary = curvature <= 0.0;
    double e_e_next = 0.0;
    double alpha = 0.0;
    if (!to_boundary) {
      alpha = rr / curvature;
      e_e_next = e_e + 2.0 * alpha * e_d + alpha * alpha * d_d;
      to_boundary = !(e_e_next < radius_sq);
    }
    if (to_boundary) {
      // Once the tracked recurrences sit at rounding scale they can lose
      // coherence (d_d or the radicand nonpositive); no meaningful boundary
      // crossing exists then, so keep the step accumulated so far.
      const double radicand = e_d * e_d + d_d * (radius_sq - e_e);
      if (d_d > 0.0 && radicand >= 0.0) {
        const double tau = (-e_d + std::sqrt(radicand)) / d_d;
        out.step += tau * dir;
        out.h_step += tau * h_dir;
      }
      out.hit_boundary = true;
      return out;
    }

    out.step += alpha * dir;
    out.h_step += alpha * h_dir;
    e_e = e_e_next;
    residual += alpha * h_dir;
    const double rr_next =
        std::max(product_metric(y, residual, residual), 0.0);
    if (std::sqrt(rr_next) <= target) return out;

    const double beta = rr_next / rr;
    rr = rr_next;
    dir = beta * dir - residual;
    e_d = beta * (e_d + alpha * d_d);
    d_d = rr + beta * beta * d_d;
  }
  return out;
}

std::string format_trace_line(int iter, double loss, double grad_norm,
                              double radius, double rho, bool accepted) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d\t%.9e\t%.9e\t%.3e\t%.3e\t%d", iter, loss,
                grad_norm, radius, rho, accepted ? 1 : 0);
  return buf;
}

}  // namespace

void validate(const TrConfig& cfg) {
  if (cfg.max_outer_iters <= 0)
    throw InvalidArgument("TrConfig: max_outer_iters must be positive");
  if (!(cfg.grad_tol > 0.0))
    throw InvalidArgument("TrConfig: grad_tol must be positive");
  if (!(cfg.initial_radius > 0.0) || !(cfg.max_radius > 0.0))
    throw InvalidArgument("TrConfig: trust-region radii must be positive");
  if (cfg.initial_radius > cfg.max_radius)
    throw InvalidArgument("TrConfig: initial_radius exceeds max_radius");
  if (!(cfg.accept_threshold > 0.0) || !(cfg.accept_threshold < 0.25))
    throw InvalidArgument("TrConfig: accept_threshold must lie in (0, 1/4)");
  if (cfg.tcg_max_iters && *cfg.tcg_max_iters <= 0)
    throw InvalidArgument("TrConfig: tcg_max_iters must be positive when set");
  if (!(cfg.tcg_kappa > 0.0))
    throw InvalidArgument("TrConfig: tcg_kappa must be positive");
  if (!(cfg.tcg_theta > 0.0) || cfg.tcg_theta > 1.0)
    throw InvalidArgument("TrConfig: tcg_theta must lie in (0, 1]");
}

ProductTangent riemannian_gradient(LossKind kind, const ProductPoint& y,
                                   const Eigen::MatrixXd& Xbar) {
  return rgrad(LossTerms(kind, y, Xbar));
}

ProductTangent riemannian_hessian_vec(LossKind kind, const ProductPoint& y,
                                      const Eigen::MatrixXd& Xbar,
                                      const ProductTangent& xi) {
  return rhess(LossTerms(kind, y, Xbar), xi);
}

std::pair<FactoredEmbedding, SolveReport> tr_solve(
    LossKind kind, const Eigen::MatrixXd& Xbar, Eigen::Index r,
    const ProductPoint& init, const TrConfig& cfg, TraceSink trace) {
  validate(cfg);
  if (init.r() != r)
    throw InvalidArgument("tr_solve: init has rank " +
                          std::to_string(init.r()) + ", expected " +
                          std::to_string(r));
  validate_product_point(init);
  const auto started = std::chrono::steady_clock::now();

  LossTerms terms(kind, init, Xbar);
  const ProductPoint& y = terms.point();
  double f = terms.value();
  if (!std::isfinite(f))
    throw NumericError("tr_solve: loss is not finite at the starting point");
  ProductTangent grad = rgrad(terms);
  // max(., 0) for the same reason as in the inner solver: the indefinite
  // form can put a rounding-noise gradient a hair below zero.
  double grad_norm = std::sqrt(std::max(product_metric(y, grad, grad), 0.0));
  if (!std::isfinite(grad_norm))
    throw NumericError(
        "tr_solve: gradient is not finite at the starting point");

  const int max_inner =
      cfg.tcg_max_iters ? *cfg.tcg_max_iters
                        : static_cast<int>(std::min<Eigen::Index>(
                              manifold_dimension(y.n(), r, y.m()),
                              std::numeric_limits<int>::max()));

  SolveReport report;
  report.loss_trace.push_back(f);
  double radius = cfg.initial_radius;
  int nonfinite_streak = 0;

  for (int k = 0; k < cfg.max_outer_iters; ++k) {
    if (grad_norm < cfg.grad_tol) break;

    const TcgResult sub = truncated_cg(terms, grad, radius, max_inner,
                                       cfg.tcg_kappa, cfg.tcg_theta);
    const double model_decrease =
        -product_metric(y, grad, sub.step) -
        0.5 * product_metric(y, sub.step, sub.h_step);

    // A wild step can break the trial point numerically (overflow in the
    // hyperbolic retraction, rank collapse in the polar factor); all such
    // failures are treated like a non-finite trial loss and shrink the
    // radius.
    double f_try = std::numeric_limits<double>::quiet_NaN();
    std::optional<LossTerms> terms_try;
    try {
      terms_try.emplace(kind, product_retract(y, sub.step), Xbar);
      f_try = terms_try->value();
    } catch (const SingularityError&) {
    } catch (const ConstraintViolation&) {
    }

    bool accepted = false;
    double rho = std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(f_try)) {
      radius *= 0.25;
      if (++nonfinite_streak >= 10)
        throw NumericError(
            "tr_solve: 10 consecutive non-finite trial losses at iteration " +
            std::to_string(k) + " (n = " + std::to_string(y.n()) +
            ", r = " + std::to_string(r) + ", m = " + std::to_string(y.m()) +
            ", loss " + std::to_string(f) + ", gradient norm " +
            std::to_string(grad_norm) + ", radius " + std::to_string(radius) +
            ")");
    } else if (!(model_decrease > 0.0)) {
      // The quadratic model has hit rounding noise (typical at a numerical
      // optimum whose gradient cannot shrink further in double precision).
      // Not a failure: reject, shrink, and let the iteration budget run out.
      nonfinite_streak = 0;
      radius *= 0.25;
    } else {
      nonfinite_streak = 0;
      rho = (f - f_try) / model_decrease;
      if (rho < 0.25)
        radius *= 0.25;
      else if (rho > 0.75 && sub.hit_boundary)
        radius = std::min(2.0 * radius, cfg.max_radius);
      // Ratio test plus an explicit descent requirement: the accepted-loss
      // sequence must never increase.
      accepted = rho > cfg.accept_threshold && f_try <= f;
      if (accepted) {
        terms = std::move(*terms_try);
        f = f_try;
        grad = rgrad(terms);
        grad_norm =
            std::sqrt(std::max(product_metric(y, grad, grad), 0.0));
        if (!std::isfinite(grad_norm))
          throw NumericError("tr_solve: gradient is not finite at iteration " +
                             std::to_string(k) + " (loss " +
                             std::to_string(f) + ")");
      }
    }

    report.loss_trace.push_back(f);
    report.accepted_flags.push_back(accepted);
    report.iterates = k + 1;
    if (trace)
      trace(format_trace_line(k, f, grad_norm, radius, rho, accepted));
  }

  validate_product_point(y);
  report.final_loss = f;
  report.final_grad_norm = grad_norm;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return {to_factored(y), report};
}

double per_iteration_cost_probe(Eigen::Index n, Eigen::Index m,
                                Eigen::Index r, LossKind kind) {
  // Synthetic data with moderate magnitudes; setup is excluded from the
  // timed section.
  GaussianSampler gauss(20240915);
  Eigen::MatrixXd Xbar(n + 1, m);
  Xbar.bottomRows(n) = gauss.matrix(n, m);
  Xbar.row(0) =
      (Xbar.bottomRows(n).colwise().squaredNorm().array() + 1.0).sqrt();
  const ProductPoint start = initialize(Xbar, r, InitStrategy::Random, 7);

  constexpr int kHessPerIter = 8;
  constexpr int kIters = 4;
  constexpr int kRepeats = 3;

  double best = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < kRepeats; ++rep) {
    const auto begin = std::chrono::steady_clock::now();
    double sink = 0.0;
    for (int it = 0; it < kIters; ++it) {
      LossTerms terms(kind, start, Xbar);
      const ProductPoint& y = terms.point();
      ProductTangent grad = rgrad(terms);
      ProductTangent v = grad;
      for (int j = 0; j < kHessPerIter; ++j) {
        v = rhess(terms, v);
        // Rescale so repeated applications cannot overflow.
        const double norm = std::sqrt(product_metric(y, v, v));
        if (norm > 1.0) v *= 1.0 / norm;
      }
      const double grad_norm =
          std::sqrt(product_metric(y, grad, grad));
      const ProductPoint moved =
          product_retract(y, (1e-3 / std::max(grad_norm, 1e-300)) * grad);
      sink += terms.value() + v.U.squaredNorm() + moved.Zbar.sum();
    }
    const double elapsed = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - begin)
                               .count();
    if (!std::isfinite(sink))
      throw NumericError("per_iteration_cost_probe: non-finite kernel output");
    best = std::min(best, elapsed / kIters);
  }
  return best;
}

}  // namespace hyperlore
