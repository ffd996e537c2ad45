#include "bqr/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bqr/error.hpp"

namespace bqr {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void check_aligned(const LatentPrediction& pred, const TauGrid& grid) {
  if (pred.size() != grid.size()) {
    throw ShapeError("prediction has " + std::to_string(pred.size()) +
                     " values for a grid of " + std::to_string(grid.size()));
  }
}

}  // namespace

SmoothedQuantileFn::SmoothedQuantileFn(TauGrid grid, LatentPrediction values,
                                       double bandwidth, SmoothingCells cells)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      bandwidth_(bandwidth),
      cells_(cells) {
  check_aligned(values_, grid_);
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
    throw DomainError("smoothing bandwidth must be positive");
  }
  const auto levels = grid_.levels();
  const std::size_t m = levels.size();
  if (cells_ == SmoothingCells::kCentered) {
    edges_.push_back(kTauLower);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      edges_.push_back(0.5 * (levels[i] + levels[i + 1]));
    }
    edges_.push_back(kTauUpper);
    cell_values_.assign(values_.values().begin(), values_.values().end());
  } else {
    edges_.push_back(kTauLower);
    edges_.insert(edges_.end(), levels.begin(), levels.end());
    edges_.push_back(kTauUpper);
    cell_values_.push_back(values_[0]);
    cell_values_.insert(cell_values_.end(), values_.values().begin(),
                        values_.values().end());
  }
}

std::vector<double> SmoothedQuantileFn::raw_weights(double tau) const {
  std::vector<double> w(cell_values_.size());
  double upper = normal_cdf((tau - edges_[0]) / bandwidth_);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double lower = normal_cdf((tau - edges_[i + 1]) / bandwidth_);
    w[i] = upper - lower;
    upper = lower;
  }
  return w;
}

double SmoothedQuantileFn::operator()(double tau) const {
  const std::vector<double> w = raw_weights(tau);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    num += w[i] * cell_values_[i];
    den += w[i];
  }
  return num / den;
}

SmoothedQuantileFn smooth(const LatentPrediction& pred, const TauGrid& grid,
                          double bandwidth, SmoothingCells cells) {
  return SmoothedQuantileFn(grid, pred, bandwidth, cells);
}

double integrate_unit(const std::function<double(double)>& f) {
  constexpr std::size_t n = kQuadraturePoints;  // odd: n - 1 even panels
  const double a = kQuadratureEdge;
  const double b = 1.0 - kQuadratureEdge;
  const double step = (b - a) / static_cast<double>(n - 1);
  double sum = f(a) + f(b);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    sum += (k % 2 == 1 ? 4.0 : 2.0) * f(a + step * static_cast<double>(k));
  }
  return sum * step / 3.0 / (b - a);
}

double conditional_mean(const SmoothedQuantileFn& sq) {
  return integrate_unit([&](double t) { return sq(t); });
}

double conditional_stat(const SmoothedQuantileFn& sq,
                        StatFunctional functional) {
  if (std::holds_alternative<Variance>(functional)) {
    const double mean = conditional_mean(sq);
    const double second = integrate_unit([&](double t) {
      const double q = sq(t);
      return q * q;
    });
    return std::max(0.0, second - mean * mean);
  }
  const int k = std::get<RawMoment>(functional).k;
  if (k < 0) throw DomainError("moment order must be non-negative");
  return integrate_unit([&](double t) { return std::pow(sq(t), k); });
}

double interpolate_quantile(const LatentPrediction& pred, const TauGrid& grid,
                            double tau) {
  check_aligned(pred, grid);
  constexpr double kTol = 1e-12;
  const auto levels = grid.levels();
  const std::size_t m = levels.size();
  if (tau < levels[0] - kTol || tau > levels[m - 1] + kTol) {
    throw OutOfGrid("tau " + std::to_string(tau) +
                    " lies outside the predicted grid range");
  }
  if (tau <= levels[0]) return pred[0];
  if (tau >= levels[m - 1]) return pred[m - 1];
  std::size_t hi = 1;
  while (levels[hi] < tau) ++hi;
  const std::size_t lo = hi - 1;
  const double frac = (tau - levels[lo]) / (levels[hi] - levels[lo]);
  return pred[lo] + frac * (pred[hi] - pred[lo]);
}

std::pair<double, double> prediction_interval(const LatentPrediction& pred,
                                              const TauGrid& grid,
                                              double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw OutOfGrid("interval level must lie in (0,1)");
  }
  return {interpolate_quantile(pred, grid, 0.5 * level),
          interpolate_quantile(pred, grid, 1.0 - 0.5 * level)};
}

ConfidenceReport delta_score(const LatentPrediction& pred,
                             const TauGrid& grid) {
  check_aligned(pred, grid);
  const std::size_t med = grid.median_index();
  const auto levels = grid.levels();
  const double q_med = pred[med];

  ConfidenceReport report;
  report.predicted_label = q_med > 0.0 ? 1 : 0;
  if (q_med == 0.0) {
    report.delta = 0.0;
  } else {
    report.delta = 0.5;
    if (q_med > 0.0) {
      // Walk down to the first level at or below zero.
      for (std::size_t k = med; k-- > 0;) {
        if (pred[k] <= 0.0) {
          const double frac = (0.0 - pred[k]) / (pred[k + 1] - pred[k]);
          const double crossing = levels[k] + frac * (levels[k + 1] - levels[k]);
          report.delta = 0.5 - crossing;
          break;
        }
      }
    } else {
      for (std::size_t k = med + 1; k < pred.size(); ++k) {
        if (pred[k] >= 0.0) {
          const double frac = (0.0 - pred[k - 1]) / (pred[k] - pred[k - 1]);
          const double crossing =
              levels[k - 1] + frac * (levels[k] - levels[k - 1]);
          report.delta = crossing - 0.5;
          break;
        }
      }
    }
  }
  report.delta = std::clamp(report.delta, 0.0, 0.5);
  report.expected_misclassification = 0.5 - report.delta;
  return report;
}

}  // namespace bqr
