#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bqr/checkpoint.hpp"
#include "bqr/data.hpp"
#include "bqr/eval.hpp"
#include "bqr/optim.hpp"
#include "bqr/quantiles.hpp"

namespace bqr {

struct ModelConfig {
  std::vector<std::size_t> trunk_widths = {64, 64};
  TauGrid grid = TauGrid::uniform(9);
  double lambda = 1.0;
  LossKind kind = LossKind::kBqr;
  std::uint64_t init_seed = 0;

  LossSpec loss_spec() const;
  /// The BCE comparison arm: same trunk, one logit head.
  ModelConfig bce_baseline() const;
};

struct FitResult {
  Checkpoint checkpoint;
  TrainTrace trace;
};

FitResult fit(const LabeledDataset& train_set, const ModelConfig& model,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct Evaluation {
  Eigen::MatrixXd preds;  ///< raw network outputs, n x m
  std::vector<ConfidenceReport> reports;
  std::vector<double> median_scores;
  double accuracy = 0.0;
  double monotone_fraction = 0.0;
  DeltaBinReport delta;
  std::optional<double> auc;
  std::optional<double> auc_confident;  ///< AUC over rows with delta >= 0.3
  /// Present when the data carries a latent and a threshold.
  std::optional<CoverageTable> coverage;
  std::optional<double> pi50_coverage;
  std::optional<double> median_latent_correlation;
  std::vector<std::string> notes;
};

inline constexpr double kConfidentDelta = 0.3;

/// Predictions, delta scores, accuracy and every dataset-level metric that
/// the data supports. BCE checkpoints get accuracy and AUC only.
Evaluation evaluate(const Checkpoint& ckpt, const LabeledDataset& data);

nlohmann::json evaluation_summary(const Evaluation& ev);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

struct NoiseSweepRow {
  double fraction = 0.0;
  double bce_accuracy = 0.0;
  double bqr_accuracy = 0.0;
};

/// Trains a BCE and a BQR network on `train_set` with a growing share of
/// flipped labels and scores both on the clean `eval_set`.
std::vector<NoiseSweepRow> noise_sweep(const LabeledDataset& train_set,
                                       const LabeledDataset& eval_set,
                                       std::span<const double> fractions,
                                       const ModelConfig& model,
                                       const TrainConfig& cfg,
                                       std::uint64_t noise_seed);

/// Table-4 layout: "dataset,loss,0%,10%,..." with a BCE row and a BQR row.
void write_noise_sweep_csv(std::ostream& out, const std::string& dataset,
                           std::span<const NoiseSweepRow> rows,
                           bool header = true);

struct LalrBenchResult {
  double target_accuracy = 0.0;
  EpochsToTarget fixed_small;  ///< eta = 0.01
  EpochsToTarget fixed_large;  ///< eta = 0.1
  EpochsToTarget adaptive;     ///< eta = 1 / (k_z L)
  TrainTrace adaptive_trace;
};

/// Three training runs from the same initialization and data; each stops
/// at the target training accuracy or after cfg.epochs.
LalrBenchResult lalr_bench(const LabeledDataset& train_set,
                           const ModelConfig& model, const TrainConfig& cfg,
                           double target_accuracy);

/// Table-5 layout: "dataset,accuracy,N_0.01,N_0.1,N_1/L".
void write_lalr_bench_csv(std::ostream& out, const std::string& dataset,
                          const LalrBenchResult& result, bool header = true);

/// Two Gaussian blobs in [-1,1]^d separated along the first axis; labels
/// follow the blob. Used for the adaptive-rate benchmark.
LabeledDataset two_blobs(std::size_t n, std::size_t dims, double separation,
                         double spread, std::uint64_t seed);

}  // namespace bqr
