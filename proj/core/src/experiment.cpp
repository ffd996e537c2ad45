#include "bqr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "bqr/error.hpp"

namespace bqr {

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

LossSpec ModelConfig::loss_spec() const {
  LossSpec spec{grid, lambda, kind};
  spec.validate();
  return spec;
}

ModelConfig ModelConfig::bce_baseline() const {
  ModelConfig out = *this;
  out.grid = TauGrid({0.5});
  out.kind = LossKind::kBce;
  out.lambda = 0.0;
  return out;
}

FitResult fit(const LabeledDataset& train_set, const ModelConfig& model,
              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  const LossSpec spec = model.loss_spec();
  QuantileNet net = init_net(train_set.dims(), model.trunk_widths, model.grid,
                             model.init_seed);
  TrainResult trained = train(std::move(net), train_set, spec, cfg, on_epoch);
  return FitResult{Checkpoint{std::move(trained.net), spec, nlohmann::json::object()},
                   std::move(trained.trace)};
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ShapeError("correlation needs two aligned samples of size >= 2");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) throw DegenerateDistribution("zero variance in correlation");
  return sab / std::sqrt(saa * sbb);
}

Evaluation evaluate(const Checkpoint& ckpt, const LabeledDataset& data) {
  data.validate();
  if (!data.has_labels()) throw SchemaError("evaluation data has no labels");
  const QuantileNet& net = ckpt.net;
  const TauGrid& grid = net.grid();

  Evaluation ev;
  ev.preds = forward_batch(net, data.features);
  const std::size_t n = data.rows();

  if (ckpt.loss.kind == LossKind::kBce) {
    ev.median_scores.assign(ev.preds.data(), ev.preds.data() + n);
    ev.accuracy = accuracy_from_scores(ev.median_scores, data.labels);
    ev.auc = roc_auc(ev.median_scores, data.labels);
    ev.monotone_fraction = 1.0;
    ev.notes.emplace_back("BCE checkpoint: quantile metrics not applicable");
    return ev;
  }

  const std::size_t med = grid.median_index();
  std::size_t monotone = 0;
  ev.reports.reserve(n);
  ev.median_scores.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd row = ev.preds.row(static_cast<Eigen::Index>(i)).transpose();
    LatentPrediction pred(std::vector<double>(row.data(), row.data() + row.size()));
    if (pred.is_monotone()) ++monotone;
    ev.reports.push_back(delta_score(pred, grid));
    ev.median_scores.push_back(pred[med]);
  }
  ev.monotone_fraction = static_cast<double>(monotone) / static_cast<double>(n);
  ev.accuracy = accuracy_from_scores(ev.median_scores, data.labels);
  ev.delta = delta_report(ev.reports, data.labels);
  ev.auc = roc_auc(ev.median_scores, data.labels);
  ev.auc_confident =
      roc_auc_at_delta(ev.median_scores, data.labels, ev.reports, kConfidentDelta);

  if (data.latent && data.threshold) {
    const NormalizedCoverage norm = normalize_for_coverage(data, ev.preds, grid);
    ev.coverage = coverage(norm.latent, norm.preds, grid);

    const std::vector<double> latent(norm.latent.data(), norm.latent.data() + n);
    const Eigen::VectorXd med_col = norm.preds.col(static_cast<Eigen::Index>(med));
    ev.median_latent_correlation = pearson_correlation(
        std::vector<double>(med_col.data(), med_col.data() + n), latent);

    if (grid[0] <= 0.25 && grid[grid.size() - 1] >= 0.75) {
      std::size_t inside = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd row =
            norm.preds.row(static_cast<Eigen::Index>(i)).transpose();
        LatentPrediction pred(std::vector<double>(row.data(), row.data() + row.size()));
        const auto [lo, hi] = prediction_interval(pred, grid, 0.5);
        if (lo <= latent[i] && latent[i] <= hi) ++inside;
      }
      ev.pi50_coverage = static_cast<double>(inside) / static_cast<double>(n);
    }
  } else {
    ev.notes.emplace_back("no latent/threshold in data: coverage skipped");
  }
  return ev;
}

nlohmann::json evaluation_summary(const Evaluation& ev) {
  nlohmann::json out;
  out["rows"] = ev.median_scores.size();
  out["accuracy"] = ev.accuracy;
  out["monotone_fraction"] = ev.monotone_fraction;
  out["auc"] = optional_json(ev.auc);
  out["auc_delta_ge_0.3"] = optional_json(ev.auc_confident);
  if (ev.coverage) {
    out["coverage"] = {{"tau", ev.coverage->tau},
                       {"coverage", ev.coverage->coverage}};
  } else {
    out["coverage"] = nullptr;
  }
  out["pi50_coverage"] = optional_json(ev.pi50_coverage);
  out["median_latent_correlation"] = optional_json(ev.median_latent_correlation);
  nlohmann::json thresholds = nlohmann::json::array();
  for (const auto& row : ev.delta.thresholds) {
    thresholds.push_back({{"threshold", row.threshold},
                          {"retention", row.retention},
                          {"misclassification", optional_json(row.misclassification)}});
  }
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& bin : ev.delta.bins) {
    bins.push_back({{"center", bin.center},
                    {"count", bin.count},
                    {"misclassification", optional_json(bin.misclassification)},
                    {"mean_delta", optional_json(bin.mean_delta)}});
  }
  out["delta"] = {{"thresholds", thresholds},
                  {"bins", bins},
                  {"r2", optional_json(ev.delta.r2)}};
  out["notes"] = ev.notes;
  return out;
}

std::vector<NoiseSweepRow> noise_sweep(const LabeledDataset& train_set,
                                       const LabeledDataset& eval_set,
                                       std::span<const double> fractions,
                                       const ModelConfig& model,
                                       const TrainConfig& cfg,
                                       std::uint64_t noise_seed) {
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 0.5)) {
      throw DomainError(fmt::format("flip fraction {} outside [0, 0.5]", f));
    }
  }
  std::vector<NoiseSweepRow> rows;
  const ModelConfig bce = model.bce_baseline();
  for (double f : fractions) {
    const LabeledDataset noisy = flip_labels(train_set, {f, noise_seed});
    NoiseSweepRow row;
    row.fraction = f;
    row.bce_accuracy = evaluate(fit(noisy, bce, cfg).checkpoint, eval_set).accuracy;
    row.bqr_accuracy = evaluate(fit(noisy, model, cfg).checkpoint, eval_set).accuracy;
    rows.push_back(row);
  }
  return rows;
}

void write_noise_sweep_csv(std::ostream& out, const std::string& dataset,
                           std::span<const NoiseSweepRow> rows, bool header) {
  if (header) {
    out << "dataset,loss";
    for (const auto& r : rows) out << fmt::format(",{:g}%", 100.0 * r.fraction);
    out << '\n';
  }
  out << dataset << ",BCE";
  for (const auto& r : rows) out << fmt::format(",{:.3f}", r.bce_accuracy);
  out << '\n' << dataset << ",BQR";
  for (const auto& r : rows) out << fmt::format(",{:.3f}", r.bqr_accuracy);
  out << '\n';
}

LalrBenchResult lalr_bench(const LabeledDataset& train_set,
                           const ModelConfig& model, const TrainConfig& cfg,
                           double target_accuracy) {
  if (!(target_accuracy > 0.0 && target_accuracy <= 1.0)) {
    throw DomainError("target accuracy must lie in (0, 1]");
  }
  const auto stop_at_target = [&](const QuantileNet&, const EpochRecord& r) {
    return r.accuracy < target_accuracy;
  };
  const auto run = [&](LearningRate lr) {
    TrainConfig arm = cfg;
    arm.lr = lr;
    return fit(train_set, model, arm, stop_at_target).trace;
  };
  LalrBenchResult out;
  out.target_accuracy = target_accuracy;
  out.fixed_small = epochs_to_target(run(FixedRate{0.01}), target_accuracy);
  out.fixed_large = epochs_to_target(run(FixedRate{0.1}), target_accuracy);
  out.adaptive_trace = run(LipschitzAdaptiveRate{});
  out.adaptive = epochs_to_target(out.adaptive_trace, target_accuracy);
  return out;
}

void write_lalr_bench_csv(std::ostream& out, const std::string& dataset,
                          const LalrBenchResult& result, bool header) {
  if (header) out << "dataset,accuracy,N_0.01,N_0.1,N_1/L\n";
  out << fmt::format("{},{:g},{},{},{}\n", dataset, result.target_accuracy,
                     result.fixed_small.to_string(),
                     result.fixed_large.to_string(),
                     result.adaptive.to_string());
}

LabeledDataset two_blobs(std::size_t n, std::size_t dims, double separation,
                         double spread, std::uint64_t seed) {
  if (n == 0 || dims == 0) throw DomainError("two_blobs needs n, dims > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, spread);
  std::bernoulli_distribution coin(0.5);
  LabeledDataset ds;
  ds.name = "blobs";
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dims));
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = coin(rng) ? 1 : 0;
    ds.labels[i] = y;
    for (std::size_t c = 0; c < dims; ++c) {
      const double center = c == 0 ? (y == 1 ? 0.5 : -0.5) * separation : 0.0;
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          std::clamp(center + noise(rng), -1.0, 1.0);
    }
  }
  return ds;
}

}  // namespace bqr
