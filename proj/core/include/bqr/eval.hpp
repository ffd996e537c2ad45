#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bqr/quantiles.hpp"
#include "bqr/tau_grid.hpp"

namespace bqr {

/// Empirical P(latent < Q(tau_j)) for every grid level.
struct CoverageTable {
  std::vector<double> tau;
  std::vector<double> coverage;
};

/// `latent` and `preds` are expected on the normalized scale produced by
/// normalize_for_coverage. Comparison is strict.
CoverageTable coverage(const Eigen::VectorXd& latent,
                       const Eigen::MatrixXd& preds, const TauGrid& grid);

inline const std::vector<double> kDefaultDeltaLevels = {0.1, 0.2, 0.3, 0.4,
                                                        0.5};

/// Metrics over the rows whose delta >= threshold.
struct RetentionRow {
  double threshold = 0.0;
  std::size_t retained = 0;
  double retention = 0.0;                        ///< r_r
  std::optional<double> misclassification;       ///< m_r, empty if none kept
};

/// Rows assigned to the nearest bin center.
struct DeltaBin {
  double center = 0.0;
  std::size_t count = 0;
  std::optional<double> misclassification;
  std::optional<double> mean_delta;
};

struct DeltaBinReport {
  std::vector<RetentionRow> thresholds;
  std::vector<DeltaBin> bins;
  /// Coefficient of determination of the observed per-bin misclassification
  /// against 0.5 - mean delta of the bin, over non-empty bins. May be
  /// negative; empty when fewer than two bins are populated or the observed
  /// rates have no spread.
  std::optional<double> r2;
};

DeltaBinReport delta_report(std::span<const ConfidenceReport> reports,
                            std::span<const int> labels,
                            std::span<const double> thresholds =
                                kDefaultDeltaLevels,
                            std::span<const double> bin_centers =
                                kDefaultDeltaLevels);

/// Standard coefficient of determination 1 - SS_res / SS_tot.
std::optional<double> r2_score(std::span<const double> observed,
                               std::span<const double> predicted);

/// Mann-Whitney AUC over rows with delta >= delta_min (ties count 1/2).
/// Empty when the retained rows lack one of the classes.
std::optional<double> roc_auc_at_delta(std::span<const double> scores,
                                       std::span<const int> labels,
                                       std::span<const ConfidenceReport> reports,
                                       double delta_min);

/// AUC over all rows.
std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const int> labels);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Predicted label is 1 iff the score (median latent) is positive.
double accuracy_from_scores(std::span<const double> scores,
                            std::span<const int> truth);

/// "dataset,q_0.10,...": one coverage row.
void write_coverage_csv(std::ostream& out, const std::string& dataset,
                        const CoverageTable& table, bool header = true);

/// "dataset,rate,0.1,...,0.5,r2": an m_r row and an r_r row. Undefined
/// values are written as NA.
void write_delta_report_csv(std::ostream& out, const std::string& dataset,
                            const DeltaBinReport& report, bool header = true);

}  // namespace bqr
