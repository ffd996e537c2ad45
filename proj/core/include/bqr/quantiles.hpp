#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "bqr/latent_prediction.hpp"
#include "bqr/tau_grid.hpp"

namespace bqr {

/// Anchors for the quantile function outside the predicted grid.
inline constexpr double kTauLower = 0.0;
inline constexpr double kTauUpper = 1.0;

/// How the discrete quantiles are laid out as a step function before the
/// Gaussian kernel is applied.
enum class SmoothingCells {
  /// Q(tau_i) owns [midpoint(tau_{i-1}, tau_i), midpoint(tau_i, tau_{i+1})],
  /// the outer cells reaching 0 and 1. Symmetric grids give symmetric weights.
  kCentered,
  /// Q(tau_i) owns [tau_i, tau_{i+1}] for i = 0..m with tau_0 = 0,
  /// tau_{m+1} = 1 and Q(tau_0) := Q(tau_1).
  kLeftStep,
};

/// Kernel-smoothed quantile function of one sample:
///   Q^s(tau) = sum_i Q_i w_i(tau) / sum_i w_i(tau),
///   w_i(tau) = Phi((tau - a_i)/h) - Phi((tau - b_i)/h)
/// where [a_i, b_i] is the cell of value Q_i (the Gaussian kernel integral
/// over that cell). Normalizing by the weight sum keeps constants exact.
class SmoothedQuantileFn {
 public:
  SmoothedQuantileFn(TauGrid grid, LatentPrediction values, double bandwidth,
                     SmoothingCells cells = SmoothingCells::kCentered);

  double operator()(double tau) const;

  /// Unnormalized kernel mass of every cell at tau.
  std::vector<double> raw_weights(double tau) const;

  const TauGrid& grid() const noexcept { return grid_; }
  const LatentPrediction& values() const noexcept { return values_; }
  double bandwidth() const noexcept { return bandwidth_; }
  SmoothingCells cells() const noexcept { return cells_; }
  /// Cell boundaries, one more than cell_values().
  const std::vector<double>& cell_edges() const noexcept { return edges_; }
  const std::vector<double>& cell_values() const noexcept { return cell_values_; }

 private:
  TauGrid grid_;
  LatentPrediction values_;
  double bandwidth_;
  SmoothingCells cells_;
  std::vector<double> edges_;
  std::vector<double> cell_values_;
};

SmoothedQuantileFn smooth(const LatentPrediction& pred, const TauGrid& grid,
                          double bandwidth = 0.1,
                          SmoothingCells cells = SmoothingCells::kCentered);

inline constexpr double kQuadratureEdge = 1e-6;
inline constexpr std::size_t kQuadraturePoints = 1001;

/// Average of f over [1e-6, 1 - 1e-6] by composite Simpson on 1001 points.
double integrate_unit(const std::function<double(double)>& f);

double conditional_mean(const SmoothedQuantileFn& sq);

struct Variance {};
/// Raw moment E[Q^k].
struct RawMoment {
  int k = 1;
};
using StatFunctional = std::variant<Variance, RawMoment>;

double conditional_stat(const SmoothedQuantileFn& sq, StatFunctional functional);

/// Piecewise-linear interpolation of Q over the grid. Throws OutOfGrid for
/// tau outside [tau_1, tau_m].
double interpolate_quantile(const LatentPrediction& pred, const TauGrid& grid,
                            double tau);

/// [Q(level/2), Q(1 - level/2)]: a 100(1 - level)% interval for the latent.
std::pair<double, double> prediction_interval(const LatentPrediction& pred,
                                              const TauGrid& grid,
                                              double level);

struct ConfidenceReport {
  double delta = 0.0;  ///< in [0, 0.5]
  int predicted_label = 0;
  double expected_misclassification = 0.5;  ///< 0.5 - delta
};

/// Distance in tau from the median to the sign change of the interpolated
/// quantile function nearest 0.5. No sign change on the grid gives 0.5;
/// a zero median gives 0. Label is 1 iff Q(0.5) > 0.
ConfidenceReport delta_score(const LatentPrediction& pred, const TauGrid& grid);

}  // namespace bqr
