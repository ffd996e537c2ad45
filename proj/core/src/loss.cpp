#include "bqr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bqr/error.hpp"

namespace bqr {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw DomainError("tau must lie in (0,1), got " + std::to_string(tau));
  }
}

void check_label(int y) {
  if (y != 0 && y != 1) {
    throw DomainError("label must be 0 or 1, got " + std::to_string(y));
  }
}

void check_latent(double z) {
  if (!std::isfinite(z)) throw DomainError("latent value must be finite");
}

}  // namespace

void LossSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("crossing weight lambda must be finite and >= 0");
  }
  if (kind == LossKind::kBce && grid.size() != 1) {
    throw ShapeError("the BCE baseline uses exactly one output");
  }
}

double prob_pos(double z, double tau) {
  check_tau(tau);
  check_latent(z);
  if (z > 0.0) return 1.0 - tau * std::exp((tau - 1.0) * z);
  return (1.0 - tau) * std::exp(tau * z);
}

// Branch forms:
//   y=1, z>0 :  -log1p(-tau e^{(tau-1) z})
//   y=1, z<=0:  -log(1-tau) - tau z
//   y=0, z>0 :  -log(tau) + (1-tau) z
//   y=0, z<=0:  -log1p(-(1-tau) e^{tau z})
double bqr_loss(int y, double z, double tau) {
  check_tau(tau);
  check_label(y);
  check_latent(z);
  if (y == 1) {
    if (z > 0.0) return -std::log1p(-tau * std::exp((tau - 1.0) * z));
    return -std::log1p(-tau) - tau * z;
  }
  if (z > 0.0) return -std::log(tau) + (1.0 - tau) * z;
  return -std::log1p(-(1.0 - tau) * std::exp(tau * z));
}

double bqr_grad_z(int y, double z, double tau) {
  check_tau(tau);
  check_label(y);
  check_latent(z);
  if (y == 1) {
    if (z > 0.0) {
      const double e = tau * std::exp((tau - 1.0) * z);
      return (tau - 1.0) * e / (1.0 - e);
    }
    return -tau;
  }
  if (z > 0.0) return 1.0 - tau;
  const double e = (1.0 - tau) * std::exp(tau * z);
  return tau * e / (1.0 - e);
}

CrossingPenalty crossing_penalty(std::span<const double> pred) {
  if (pred.size() < 2) {
    throw DegenerateGrid("crossing penalty needs at least two levels");
  }
  CrossingPenalty out;
  out.subgradient.assign(pred.size(), 0.0);
  for (std::size_t p = 0; p + 1 < pred.size(); ++p) {
    const double gap = pred[p] - pred[p + 1];
    if (gap > 0.0) {
      out.value += gap;
      out.subgradient[p] += 1.0;
      out.subgradient[p + 1] -= 1.0;
    }
  }
  return out;
}

double bce_loss(int y, double logit) {
  check_label(y);
  check_latent(logit);
  // softplus(s) - y s, written to avoid overflow for large |s|
  const double softplus =
      std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return softplus - static_cast<double>(y) * logit;
}

double bce_grad(int y, double logit) {
  check_label(y);
  check_latent(logit);
  const double sigmoid = logit >= 0.0
                             ? 1.0 / (1.0 + std::exp(-logit))
                             : std::exp(logit) / (1.0 + std::exp(logit));
  return sigmoid - static_cast<double>(y);
}

double total_loss_grad(int y, std::span<const double> pred,
                       const LossSpec& spec, std::span<double> grad_out) {
  if (pred.size() != spec.outputs() || grad_out.size() != pred.size()) {
    throw ShapeError("prediction length " + std::to_string(pred.size()) +
                     " does not match grid size " +
                     std::to_string(spec.outputs()));
  }
  if (spec.kind == LossKind::kBce) {
    grad_out[0] = bce_grad(y, pred[0]);
    return bce_loss(y, pred[0]);
  }
  double loss = 0.0;
  const auto levels = spec.grid.levels();
  for (std::size_t j = 0; j < pred.size(); ++j) {
    loss += bqr_loss(y, pred[j], levels[j]);
    grad_out[j] = bqr_grad_z(y, pred[j], levels[j]);
  }
  if (spec.lambda > 0.0 && pred.size() >= 2) {
    for (std::size_t p = 0; p + 1 < pred.size(); ++p) {
      const double gap = pred[p] - pred[p + 1];
      if (gap > 0.0) {
        loss += spec.lambda * gap;
        grad_out[p] += spec.lambda;
        grad_out[p + 1] -= spec.lambda;
      }
    }
  }
  return loss;
}

double total_loss(int y, std::span<const double> pred, const LossSpec& spec) {
  std::vector<double> scratch(pred.size());
  return total_loss_grad(y, pred, spec, scratch);
}

double lipschitz_const(const LossSpec& spec) {
  if (spec.kind == LossKind::kBce) return 1.0;
  double lip = 0.0;
  for (double tau : spec.grid.levels()) lip += std::max(tau, 1.0 - tau);
  const auto m = static_cast<double>(spec.grid.size());
  return lip + 2.0 * spec.lambda * (m - 1.0);
}

CurvatureBounds curvature_bounds(double tau, double m_bound) {
  check_tau(tau);
  if (!(m_bound > 0.0) || !std::isfinite(m_bound)) {
    throw DomainError("latent bound M must be positive and finite");
  }
  const double t = tau;
  const double s = 1.0 - tau;
  const double big_m = m_bound;

  CurvatureBounds b;
  b.tau = tau;
  b.m_bound = m_bound;
  const double e1 = std::exp(-s * big_m);
  const double e2 = std::exp(-t * big_m);
  const double em = std::exp(-big_m);
  b.a1 = t * s * s * e1 / (1.0 - t * e1);
  b.a2 = t * t * s * e2 / (1.0 - s * e2);
  b.a3 = t * s * s * s * em / ((1.0 - t * e1) * (1.0 - t * e1));
  b.a4 = t * t * t * s * em / ((1.0 - s * em) * (1.0 - s * em));
  b.c1 = 0.5 * std::min({b.a1, b.a2, b.a3, b.a4});
  b.c2 = 0.5 * t * s;
  return b;
}

}  // namespace bqr
