#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hyperlore/losses.hpp"
#include "hyperlore/product.hpp"

namespace hyperlore {

struct TrConfig {
  int max_outer_iters = 500;
  double grad_tol = 1e-6;        // stop when the product-metric gradient norm drops below this
  double initial_radius = 1.0;
  double max_radius = 100.0;
  double accept_threshold = 0.1; // rho': accept a step when rho exceeds this; must stay below 1/4
  // Inner solver cap; defaults to the manifold dimension nr - r(r+1)/2 + mr.
  std::optional<int> tcg_max_iters;
  double tcg_kappa = 0.1;        // linear-phase residual reduction factor
  double tcg_theta = 1.0;        // superlinear exponent: stop at ||r0|| * min(kappa, ||r0||^theta)
  std::uint64_t seed = 0;        // consumed by callers that draw the starting point
};

void validate(const TrConfig& cfg);

struct SolveReport {
  int iterates = 0;                 // outer iterations performed
  double final_loss = 0.0;
  double final_grad_norm = 0.0;
  // loss_trace[0] is the loss at the starting point, followed by one entry
  // per outer iteration (unchanged value on rejected steps), so the whole
  // trace is non-increasing. accepted_flags[k] tells whether iteration k's
  // step was taken; it has one entry less than loss_trace.
  std::vector<double> loss_trace;
  std::vector<bool> accepted_flags;
  double wall_time = 0.0;           // seconds; the only field that varies across identical runs
};

// Per-iteration trace line: "iter\tloss\tgrad_norm\tradius\trho\taccepted".
using TraceSink = std::function<void(const std::string&)>;

// Metric-compatible gradient: the ambient partials are converted to the
// Lorentz gradient convention on the hyperbolic blocks (time-row sign flip)
// and projected onto the tangent space, so that g(grad f, xi) equals the
// directional derivative for every tangent xi.
ProductTangent riemannian_gradient(LossKind kind, const ProductPoint& y,
                                   const Eigen::MatrixXd& Xbar);

// Tangent projection of the directional derivative of the Riemannian
// gradient field along xi. Self-adjoint with respect to the product metric.
ProductTangent riemannian_hessian_vec(LossKind kind, const ProductPoint& y,
                                      const Eigen::MatrixXd& Xbar,
                                      const ProductTangent& xi);

// Trust-region minimization of the given loss over St(r,n) x (H^r)^m,
// starting from init. The subproblem is solved by truncated conjugate
// gradients with the Steihaug-Toint boundary and negative-curvature rules.
// Deterministic: identical inputs and config give identical iterates (only
// SolveReport::wall_time varies). Steps are accepted only when they reduce
// the loss, so the accepted-loss sequence never increases.
std::pair<FactoredEmbedding, SolveReport> tr_solve(
    LossKind kind, const Eigen::MatrixXd& Xbar, Eigen::Index r,
    const ProductPoint& init, const TrConfig& cfg, TraceSink trace = {});

// Mean wall-clock seconds of one outer iteration's worth of kernels (loss,
// gradient, a fixed number of Hessian-vector products, one retraction) on a
// synthetic problem of the given size. Fixed operation counts make the
// measurement comparable across sizes; best of three repeats.
double per_iteration_cost_probe(Eigen::Index n, Eigen::Index m,
                                Eigen::Index r, LossKind kind);

}  // namespace hyperlore
