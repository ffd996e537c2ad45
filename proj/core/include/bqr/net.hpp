#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bqr/latent_prediction.hpp"
#include "bqr/loss.hpp"
#include "bqr/tau_grid.hpp"

namespace bqr {

/// Feed-forward ReLU network: a trunk of dense ReLU layers shared by every
/// quantile level, followed by one scalar linear head per grid level.
///
/// All parameters live in one flat vector. Layer l (trunk layers first,
/// the stacked heads last) occupies a contiguous block: its weight matrix
/// (out x in, column-major) followed by its bias vector. Head j is row j
/// of the final weight matrix plus bias entry j.
class QuantileNet {
 public:
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  /// Zero-initialized network. Throws InvalidArchitecture on an empty
  /// trunk, a zero width, or a zero input dimension.
  QuantileNet(std::size_t input_dim, std::vector<std::size_t> trunk_widths,
              TauGrid grid);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::span<const std::size_t> trunk_widths() const noexcept {
    return trunk_widths_;
  }
  const TauGrid& grid() const noexcept { return grid_; }
  std::size_t outputs() const noexcept { return grid_.size(); }

  /// Trunk layers plus the head layer.
  std::size_t layer_count() const noexcept { return trunk_widths_.size() + 1; }
  std::size_t layer_inputs(std::size_t layer) const;
  std::size_t layer_outputs(std::size_t layer) const;

  std::size_t param_count() const noexcept {
    return static_cast<std::size_t>(params_.size());
  }
  const Vector& params() const noexcept { return params_; }
  Vector& params() noexcept { return params_; }
  /// Replaces every parameter; throws ShapeError on a length mismatch and
  /// DomainError on a non-finite entry.
  void set_params(const Vector& flat);

  ConstMatrixMap weight(std::size_t layer) const;
  ConstVectorMap bias(std::size_t layer) const;
  MatrixMap weight(std::size_t layer);
  VectorMap bias(std::size_t layer);

  /// Offsets of layer `layer`'s weight and bias blocks in params().
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;

  bool all_finite() const noexcept { return params_.allFinite(); }

 private:
  std::size_t input_dim_;
  std::vector<std::size_t> trunk_widths_;
  TauGrid grid_;
  std::vector<std::size_t> offsets_;  // weight offset of each layer
  Vector params_;
};

/// He-scaled trunk weights (variance 2/fan_in), heads with variance
/// 1/fan_in, zero biases. Deterministic in `seed`.
QuantileNet init_net(std::size_t input_dim,
                     std::vector<std::size_t> trunk_widths, TauGrid grid,
                     std::uint64_t seed);

LatentPrediction forward(const QuantileNet& net, std::span<const double> x);

/// Row i of the result holds the predictions for row i of `inputs`
/// (n x input_dim).
Eigen::MatrixXd forward_batch(const QuantileNet& net,
                              const Eigen::MatrixXd& inputs);

struct LossAndGradient {
  double loss = 0.0;         ///< mean total loss over the batch
  Eigen::VectorXd gradient;  ///< same layout as QuantileNet::params()
};

/// Exact reverse-mode gradient of the batch-mean total loss. `inputs` is
/// b x input_dim with one label per row. ReLU'(0) is taken as 0.
LossAndGradient backward(const QuantileNet& net, const Eigen::MatrixXd& inputs,
                         std::span<const int> labels, const LossSpec& spec);

std::size_t param_count(const QuantileNet& net);
Eigen::VectorXd flatten(const QuantileNet& net);
/// Copy of `shape` carrying the parameters in `flat`.
QuantileNet unflatten(const QuantileNet& shape, const Eigen::VectorXd& flat);

/// Largest |d f_j(x) / d w| over every sample row, every head j and every
/// weight entry w (biases excluded).
double output_weight_grad_maxnorm(const QuantileNet& net,
                                  const Eigen::MatrixXd& inputs);

}  // namespace bqr
