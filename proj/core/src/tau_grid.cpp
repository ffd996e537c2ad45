#include "bqr/tau_grid.hpp"

#include <cmath>
#include <string>

#include "bqr/error.hpp"

namespace bqr {

TauGrid::TauGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw InvalidGrid("tau grid must not be empty");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const double t = levels_[i];
    if (!(t > 0.0 && t < 1.0)) {
      throw InvalidGrid("tau level " + std::to_string(t) +
                        " outside the open interval (0,1)");
    }
    if (i > 0 && !(levels_[i - 1] < t)) {
      throw InvalidGrid("tau levels must be strictly increasing");
    }
  }
}

TauGrid TauGrid::uniform(std::size_t m) {
  if (m == 0) throw InvalidGrid("uniform grid needs at least one level");
  std::vector<double> levels(m);
  const double denom = static_cast<double>(m + 1);
  for (std::size_t k = 1; k <= m; ++k) {
    levels[k - 1] = static_cast<double>(k) / denom;
  }
  return TauGrid(std::move(levels));
}

bool TauGrid::has_median() const noexcept {
  for (double t : levels_) {
    if (t == 0.5) return true;
  }
  return false;
}

std::size_t TauGrid::median_index() const {
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i] == 0.5) return i;
  }
  throw InvalidGrid("tau grid does not contain the median level 0.5");
}

bool TauGrid::is_symmetric(double tol) const noexcept {
  const std::size_t m = levels_.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(levels_[i] + levels_[m - 1 - i] - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace bqr
