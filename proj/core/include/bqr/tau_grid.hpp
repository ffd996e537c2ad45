#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bqr {

/// Ordered quantile levels a network predicts. Levels are strictly
/// increasing and lie in the open interval (0, 1).
///
/// The median level 0.5 is not required at construction (single-level
/// or off-median grids are legitimate loss configurations), but every
/// confidence-score or classification routine asks for `median_index()`,
/// which throws `InvalidGrid` when 0.5 is absent.
class TauGrid {
 public:
  explicit TauGrid(std::vector<double> levels);

  /// Levels k/(m+1), k = 1..m. Odd m yields a grid containing 0.5.
  static TauGrid uniform(std::size_t m = 9);

  std::span<const double> levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return levels_.size(); }
  double operator[](std::size_t i) const { return levels_[i]; }

  bool has_median() const noexcept;
  std::size_t median_index() const;

  /// Symmetric about 0.5 to within `tol`.
  bool is_symmetric(double tol = 1e-12) const noexcept;

  friend bool operator==(const TauGrid&, const TauGrid&) = default;

 private:
  std::vector<double> levels_;
};

}  // namespace bqr
