#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bqr {

/// Estimated latent quantiles Q_x(tau_j) for one input, one entry per grid
/// level. Monotonicity is expected after training but never enforced;
/// `crossings()` counts the adjacent pairs that violate it.
class LatentPrediction {
 public:
  LatentPrediction() = default;
  explicit LatentPrediction(std::vector<double> values)
      : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  std::size_t crossings() const noexcept {
    std::size_t count = 0;
    for (std::size_t i = 1; i < values_.size(); ++i) {
      if (values_[i - 1] > values_[i]) ++count;
    }
    return count;
  }
  bool is_monotone() const noexcept { return crossings() == 0; }

  friend bool operator==(const LatentPrediction&,
                         const LatentPrediction&) = default;

 private:
  std::vector<double> values_;
};

}  // namespace bqr
