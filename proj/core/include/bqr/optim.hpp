#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bqr/data.hpp"
#include "bqr/error.hpp"
#include "bqr/loss.hpp"
#include "bqr/net.hpp"

namespace bqr {

struct FixedRate {
  double eta = 0.1;
};

/// eta = 1 / (k_z * L), recomputed once per epoch.
struct LipschitzAdaptiveRate {};

using LearningRate = std::variant<FixedRate, LipschitzAdaptiveRate>;

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  LearningRate lr = FixedRate{0.1};
  std::uint64_t seed = 0;
  double kz_floor = 1e-3;
  double eta_cap = 10.0;
  bool shuffle = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;           ///< 1-based
  double loss = 0.0;       ///< mean training loss over the epoch's batches
  double accuracy = 0.0;   ///< training accuracy after the epoch
  double eta = 0.0;        ///< step size used in this epoch
  double kz = 0.0;         ///< k_z estimate from the epoch's first batch
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;

  /// Header "epoch,loss,accuracy,eta,kz", one row per epoch.
  void write_csv(std::ostream& out) const;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, TrainTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const noexcept { return trace_; }

 private:
  TrainTrace trace_;
};

/// Supremum of the output-parameter gradient (max-norm over weights, every
/// head, every row of `inputs`), floored at `kz_floor`.
double estimate_kz(const QuantileNet& net, const Eigen::MatrixXd& inputs,
                   double kz_floor = 1e-3);

/// 1 / (kz * lip). Throws DomainError unless both are positive.
double lalr_eta(double kz, double lip);

/// Called after each epoch with the net as it stands and the new record.
/// Returning false stops training early.
using EpochCallback =
    std::function<bool(const QuantileNet& net, const EpochRecord& record)>;

struct TrainResult {
  QuantileNet net;
  TrainTrace trace;
};

/// Minibatch SGD with mean-reduced gradients. Each epoch reshuffles with a
/// sub-seed derived from cfg.seed, so identical inputs give identical runs.
/// Throws TrainingDiverged (carrying the trace so far) on a non-finite loss.
TrainResult train(QuantileNet net, const LabeledDataset& data,
                  const LossSpec& spec, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Fraction of rows whose predicted label (median / logit > 0) matches.
double train_accuracy(const QuantileNet& net, const LabeledDataset& data,
                      const LossSpec& spec);

struct EpochsToTarget {
  std::optional<int> epoch;   ///< first epoch meeting the target
  double max_accuracy = 0.0;  ///< best accuracy seen in the trace

  bool reached() const noexcept { return epoch.has_value(); }
  /// "14" or "N/A (0.775)".
  std::string to_string() const;
};

EpochsToTarget epochs_to_target(const TrainTrace& trace, double target_acc);

}  // namespace bqr
