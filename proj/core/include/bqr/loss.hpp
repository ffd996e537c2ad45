#pragma once

#include <span>
#include <vector>

#include "bqr/tau_grid.hpp"

namespace bqr {

enum class LossKind {
  kBqr,  ///< binary quantile regression over every grid level
  kBce,  ///< sigmoid cross-entropy on a single logit (comparison baseline)
};

struct LossSpec {
  TauGrid grid = TauGrid::uniform(9);
  double lambda = 1.0;  ///< weight of the quantile-crossing hinge
  LossKind kind = LossKind::kBqr;

  /// Throws DomainError on a negative or non-finite lambda, and ShapeError
  /// for a BCE spec whose grid is not a single level.
  void validate() const;
  std::size_t outputs() const noexcept { return grid.size(); }
};

/// P(y = 1 | z) when the latent is z plus asymmetric-Laplace noise whose
/// tau-quantile is zero. The z = 0 point belongs to the lower branch.
double prob_pos(double z, double tau);

/// Negative Bernoulli log-likelihood under prob_pos, evaluated in the log
/// domain on each branch so it stays finite for every finite z.
double bqr_loss(int y, double z, double tau);

/// dL/dz of bqr_loss. Bounded in magnitude by max(tau, 1 - tau).
double bqr_grad_z(int y, double z, double tau);

struct CrossingPenalty {
  double value = 0.0;
  std::vector<double> subgradient;  ///< d(value)/d(pred_j)
};

/// Sum of max(0, pred_p - pred_{p+1}) over adjacent levels. Ties count as
/// ordered and receive zero subgradient.
CrossingPenalty crossing_penalty(std::span<const double> pred);

/// Per-sample loss: summed BQR terms plus lambda times the crossing
/// penalty, or the BCE baseline on pred[0] used as a logit.
double total_loss(int y, std::span<const double> pred, const LossSpec& spec);

/// total_loss and its gradient w.r.t. every entry of `pred`.
double total_loss_grad(int y, std::span<const double> pred,
                       const LossSpec& spec, std::span<double> grad_out);

double bce_loss(int y, double logit);
double bce_grad(int y, double logit);

/// Lipschitz constant of total_loss w.r.t. the prediction vector (in the
/// l-infinity sense used by the adaptive step): sum_j max(tau_j, 1 - tau_j)
/// + 2 lambda (m - 1). A single level reduces to max(tau, 1 - tau); the
/// BCE baseline is 1-Lipschitz.
double lipschitz_const(const LossSpec& spec);

/// Lower/upper curvature constants of the expected excess BQR loss over a
/// latent bounded by M:  c1 (f - f*)^2 <= E[L(y,f) - L(y,f*)] <= c2 (f - f*)^2.
struct CurvatureBounds {
  double tau = 0.5;
  double m_bound = 1.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double a4 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

CurvatureBounds curvature_bounds(double tau, double m_bound);

}  // namespace bqr
