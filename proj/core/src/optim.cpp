#include "bqr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

namespace bqr {

namespace {

std::size_t decision_column(const TauGrid& grid) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (std::abs(grid[j] - 0.5) < std::abs(grid[best] - 0.5)) best = j;
  }
  return best;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& features,
                            std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) =
        features.row(static_cast<Eigen::Index>(rows[k]));
  }
  return out;
}

std::mt19937_64 epoch_rng(std::uint64_t seed, int epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  return std::mt19937_64(seq);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw DomainError("epochs must be non-negative");
  if (batch_size <= 0) throw DomainError("batch size must be positive");
  if (const auto* fixed = std::get_if<FixedRate>(&lr)) {
    if (!(fixed->eta > 0.0) || !std::isfinite(fixed->eta)) {
      throw DomainError("fixed learning rate must be positive");
    }
  }
  if (!(kz_floor > 0.0)) throw DomainError("kz_floor must be positive");
  if (!(eta_cap > 0.0)) throw DomainError("eta_cap must be positive");
}

void TrainTrace::write_csv(std::ostream& out) const {
  out << "epoch,loss,accuracy,eta,kz\n";
  for (const auto& r : epochs) {
    out << fmt::format("{},{},{},{},{}\n", r.epoch, r.loss, r.accuracy, r.eta,
                       r.kz);
  }
}

double estimate_kz(const QuantileNet& net, const Eigen::MatrixXd& inputs,
                   double kz_floor) {
  if (inputs.rows() == 0) throw EmptyBatch("k_z needs a non-empty batch");
  return std::max(output_weight_grad_maxnorm(net, inputs), kz_floor);
}

double lalr_eta(double kz, double lip) {
  if (!(kz > 0.0) || !(lip > 0.0)) {
    throw DomainError("k_z and the Lipschitz constant must be positive");
  }
  return 1.0 / (kz * lip);
}

double train_accuracy(const QuantileNet& net, const LabeledDataset& data,
                      const LossSpec& spec) {
  if (data.rows() == 0) throw DomainError("accuracy of an empty dataset");
  const Eigen::MatrixXd out = forward_batch(net, data.features);
  const auto col = static_cast<Eigen::Index>(decision_column(spec.grid));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const int predicted = out(static_cast<Eigen::Index>(i), col) > 0.0 ? 1 : 0;
    if (predicted == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.rows());
}

TrainResult train(QuantileNet net, const LabeledDataset& data,
                  const LossSpec& spec, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  spec.validate();
  data.validate();
  if (!data.has_labels()) throw SchemaError("training data has no labels");
  if (data.dims() != net.input_dim()) {
    throw ShapeError("dataset feature count does not match the network");
  }
  if (spec.outputs() != net.outputs()) {
    throw ShapeError("loss spec grid does not match the network heads");
  }

  TrainResult result{std::move(net), {}};
  QuantileNet& model = result.net;
  const double lip = lipschitz_const(spec);
  const std::size_t n = data.rows();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) {
      auto rng = epoch_rng(cfg.seed, epoch);
      std::shuffle(order.begin(), order.end(), rng);
    }

    EpochRecord record;
    record.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const std::span<const std::size_t> rows(order.data() + start,
                                              stop - start);
      const Eigen::MatrixXd inputs = gather_rows(data.features, rows);
      std::vector<int> labels;
      labels.reserve(rows.size());
      for (std::size_t r : rows) labels.push_back(data.labels[r]);

      if (start == 0) {
        record.kz = estimate_kz(model, inputs, cfg.kz_floor);
        if (const auto* fixed = std::get_if<FixedRate>(&cfg.lr)) {
          record.eta = fixed->eta;
        } else {
          record.eta = std::min(lalr_eta(record.kz, lip), cfg.eta_cap);
        }
      }

      LossAndGradient lg;
      try {
        lg = backward(model, inputs, labels, spec);
      } catch (const DomainError& e) {
        throw TrainingDiverged(
            fmt::format("epoch {}: {}", epoch, e.what()), result.trace);
      }
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
        throw TrainingDiverged(
            fmt::format("non-finite loss in epoch {}", epoch), result.trace);
      }
      loss_sum += lg.loss * static_cast<double>(rows.size());
      model.params() -= record.eta * lg.gradient;
    }
    record.loss = loss_sum / static_cast<double>(n);
    if (!model.all_finite()) {
      throw TrainingDiverged(
          fmt::format("parameters became non-finite in epoch {}", epoch),
          result.trace);
    }
    record.accuracy = train_accuracy(model, data, spec);
    result.trace.epochs.push_back(record);
    if (on_epoch && !on_epoch(model, record)) break;
  }
  return result;
}

std::string EpochsToTarget::to_string() const {
  if (epoch) return std::to_string(*epoch);
  return fmt::format("N/A ({:.3f})", max_accuracy);
}

EpochsToTarget epochs_to_target(const TrainTrace& trace, double target_acc) {
  EpochsToTarget out;
  for (const auto& r : trace.epochs) {
    out.max_accuracy = std::max(out.max_accuracy, r.accuracy);
    if (!out.epoch && r.accuracy >= target_acc) out.epoch = r.epoch;
  }
  return out;
}

}  // namespace bqr
