#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bqr/tau_grid.hpp"

namespace bqr {

/// Binary classification data. Features are n x d; labels stay empty until
/// a threshold is applied to the latent response. Simulated sets carry the
/// pre-threshold latent; a threshold is only ever recorded alongside one.
struct LabeledDataset {
  std::string name;
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::optional<std::vector<double>> latent;
  std::optional<double> threshold;

  std::size_t rows() const noexcept {
    return static_cast<std::size_t>(features.rows());
  }
  std::size_t dims() const noexcept {
    return static_cast<std::size_t>(features.cols());
  }
  bool has_labels() const noexcept { return !labels.empty(); }

  /// Throws SchemaError when the fields are inconsistent.
  void validate() const;
};

enum class DatasetId { kD1, kD2, kD3, kD4, kD5, kD6 };

DatasetId parse_dataset_id(std::string_view name);
std::string_view to_string(DatasetId id);

/// Noise-free latent mean of each generator at x.
double dataset_signal(DatasetId id, double x);

/// x ~ U(-1, 1), latent = signal(x) + noise. No labels yet.
LabeledDataset gen_dataset(DatasetId id, std::size_t n, std::uint64_t seed);

/// label = 0 where latent <= mu, 1 otherwise.
LabeledDataset threshold_labels(LabeledDataset ds, double mu);

/// Empirical q-quantile of the latent column (linear interpolation between
/// order statistics).
double latent_quantile(const LabeledDataset& ds, double q);

struct NoiseSpec {
  double flip_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Rows whose label flip_labels would invert: round(fraction * n) distinct
/// indices, sorted.
std::vector<std::size_t> flip_indices(std::size_t n, const NoiseSpec& spec);

LabeledDataset flip_labels(const LabeledDataset& ds, const NoiseSpec& spec);

LabeledDataset subset(const LabeledDataset& ds,
                      std::span<const std::size_t> rows);

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
};

/// Seeded shuffle, first `n_train` rows to train, the rest to test.
TrainTestSplit split_dataset(const LabeledDataset& ds, std::size_t n_train,
                             std::uint64_t seed);
/// 70/30 unless told otherwise.
TrainTestSplit split_fraction(const LabeledDataset& ds, double train_fraction,
                              std::uint64_t seed);

/// Per-column affine map onto [-1, 1], fitted on one dataset and reusable
/// on another. Constant columns map to 0; reuse clamps to [-1, 1].
struct FeatureScaling {
  std::vector<double> lo;
  std::vector<double> hi;

  static FeatureScaling fit(const Eigen::MatrixXd& features);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

struct CsvOptions {
  /// Empty: the file has no label column (features only, e.g. for scoring).
  std::string label_column = "label";
  char delimiter = ',';
  /// Lines starting with this character are skipped; '\0' disables.
  char comment = '#';
  bool scale = true;
  /// Without `latent_column`: the label column is a real target, labels are
  /// target > threshold and the target is kept as the latent.
  /// With `latent_column`: recorded as the latent's threshold.
  std::optional<double> threshold;
  std::optional<std::string> latent_column;
  /// Columns that are neither features nor labels (e.g. exported q_* columns).
  std::vector<std::string> ignore_columns;
  /// Scaling fitted on training data; fitted afresh when absent.
  std::optional<FeatureScaling> scaling;
};

struct LoadedCsv {
  LabeledDataset dataset;
  std::vector<std::string> feature_names;
  std::optional<FeatureScaling> scaling;
};

LoadedCsv load_csv(const std::filesystem::path& path, const CsvOptions& opts);

/// Writes features, label, optional latent and optional quantile columns
/// q_0.10 ... (one per grid level). Feature columns are named "x" when d = 1
/// and x1..xd otherwise. Values use round-trip precision.
void write_csv(const LabeledDataset& ds, const std::filesystem::path& path,
               const Eigen::MatrixXd* quantiles = nullptr,
               const TauGrid* grid = nullptr);
void write_csv(const LabeledDataset& ds, std::ostream& out,
               const Eigen::MatrixXd* quantiles = nullptr,
               const TauGrid* grid = nullptr);

std::string quantile_column_name(double tau);

struct NormalizedCoverage {
  Eigen::VectorXd latent;  ///< (latent - mu) standardized
  Eigen::MatrixXd preds;   ///< every column standardized by the median column
};

/// Puts the true latent and the predicted quantiles on a common scale:
/// the thresholded latent is standardized by its own mean and (population)
/// standard deviation, all quantile columns by those of the median column.
NormalizedCoverage normalize_for_coverage(const LabeledDataset& ds,
                                          const Eigen::MatrixXd& preds,
                                          const TauGrid& grid);

}  // namespace bqr
