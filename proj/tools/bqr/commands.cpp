#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "bqr/checkpoint.hpp"
#include "bqr/error.hpp"
#include "bqr/quantiles.hpp"

namespace bqr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string preamble(const Settings& s) {
  return fmt::format("# bqr config_hash={}\n", s.hash);
}

void write_file(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("failed writing " + path.string());
}

json with_config(const Settings& s, json body) {
  body["config"] = s.doc;
  body["config_hash"] = s.hash;
  return body;
}

// Anything that goes wrong while loading inputs is a validation failure.
template <class F>
auto validated(F&& f) {
  try {
    return f();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
}

Checkpoint load_for(const Settings& s, const Paths& p, bool need_quantiles) {
  (void)s;
  if (p.checkpoint.empty()) throw ValidationError("--checkpoint is required");
  Checkpoint ckpt = validated([&] { return load_checkpoint(p.checkpoint); });
  if (need_quantiles &&
      (ckpt.loss.kind != LossKind::kBqr || !ckpt.net.grid().has_median())) {
    throw ValidationError("this command needs a quantile checkpoint whose grid contains 0.5");
  }
  return ckpt;
}

void progress(const EpochRecord& r, int total) {
  const int every = std::max(1, total / 10);
  if (r.epoch % every == 0 || r.epoch == total) {
    std::cerr << fmt::format("epoch {}/{} loss {:.4f} acc {:.3f} eta {:.4g} kz {:.4g}\n",
                             r.epoch, total, r.loss, r.accuracy, r.eta, r.kz);
  }
}

}  // namespace

int cmd_simulate(const Settings& s, const Paths& p) {
  const LabeledDataset ds = validated([&] { return load_dataset(s.data); });
  const fs::path out = p.out.empty() ? fs::path(s.data.source + ".csv") : p.out;
  std::ostringstream body;
  body << preamble(s);
  write_csv(ds, body);
  write_file(out, body.str());
  std::cerr << fmt::format("wrote {} rows to {}\n", ds.rows(), out.string());
  return 0;
}

int cmd_train(const Settings& s, const Paths& p) {
  const PreparedData data = validated([&] { return prepare(s); });
  const fs::path dir = p.out.empty() ? fs::path("bqr_train") : p.out;
  fs::create_directories(dir);

  try {
    FitResult res = fit(data.train, s.model, s.train, [&](const QuantileNet&, const EpochRecord& r) {
      progress(r, s.train.epochs);
      return true;
    });
    res.checkpoint.metadata["config"] = s.doc;
    res.checkpoint.metadata["config_hash"] = s.hash;
    if (data.scaling) res.checkpoint.metadata["feature_scaling"] = scaling_to_json(*data.scaling);
    save_checkpoint(res.checkpoint, dir / "checkpoint.json");
    std::ostringstream trace;
    trace << preamble(s);
    res.trace.write_csv(trace);
    write_file(dir / "trace.csv", trace.str());
    write_file(dir / "config.json", with_config(s, json::object()).dump(2) + "\n");
    const double test_acc = train_accuracy(res.checkpoint.net, data.test, s.model.loss_spec());
    std::cerr << fmt::format("test accuracy {:.4f}; wrote {}\n", test_acc, dir.string());
  } catch (const TrainingDiverged& e) {
    std::ostringstream trace;
    trace << preamble(s);
    e.trace().write_csv(trace);
    write_file(dir / "trace.csv", trace.str());
    std::cerr << "error: " << e.what() << " (partial trace in " << (dir / "trace.csv").string()
              << ")\n";
    return 3;
  }
  return 0;
}

int cmd_evaluate(const Settings& s, const Paths& p) {
  const Checkpoint ckpt = load_for(s, p, false);
  LabeledDataset data = validated([&] {
    if (p.split == "all") return load_dataset(s.data);
    if (p.split != "test" && p.split != "train") {
      throw ValidationError("--split must be test, train or all");
    }
    PreparedData prepared = prepare(s);
    return p.split == "test" ? prepared.test : prepared.train;
  });
  if (p.split == "all" && s.data.source == "csv") {
    auto sc = scaling_from_json(ckpt.metadata);
    data.features = sc ? sc->apply(data.features) : FeatureScaling::fit(data.features).apply(data.features);
  }
  if (data.dims() != ckpt.net.input_dim()) {
    throw ValidationError(fmt::format("checkpoint expects {} features, data has {}",
                                      ckpt.net.input_dim(), data.dims()));
  }

  const Evaluation ev = evaluate(ckpt, data);
  const fs::path dir = p.out.empty() ? fs::path("bqr_eval") : p.out;
  fs::create_directories(dir);
  const std::string name = s.data.source;
  if (ev.coverage) {
    std::ostringstream cov;
    cov << preamble(s);
    write_coverage_csv(cov, name, *ev.coverage);
    write_file(dir / "coverage.csv", cov.str());
  }
  if (!ev.reports.empty()) {
    std::ostringstream rep;
    rep << preamble(s);
    write_delta_report_csv(rep, name, ev.delta);
    write_file(dir / "delta_report.csv", rep.str());
  }
  json summary = with_config(s, evaluation_summary(ev));
  summary["checkpoint"] = p.checkpoint.string();
  summary["checkpoint_config_hash"] = ckpt.metadata.value("config_hash", "");
  summary["split"] = p.split;
  summary["rows"] = data.rows();
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  for (const auto& note : ev.notes) std::cerr << "note: " << note << "\n";
  std::cerr << fmt::format("accuracy {:.4f}; wrote {}\n", ev.accuracy, dir.string());
  return 0;
}

int cmd_noise_sweep(const Settings& s, const Paths& p) {
  const PreparedData data = validated([&] { return prepare(s); });
  const auto rows = noise_sweep(data.train, data.test, s.fractions, s.model, s.train, s.noise_seed);
  const fs::path out = p.out.empty() ? fs::path("noise_sweep.csv") : p.out;
  std::ostringstream body;
  body << preamble(s);
  write_noise_sweep_csv(body, s.data.source, rows);
  write_file(out, body.str());
  std::cout << body.str();
  return 0;
}

int cmd_lalr_bench(const Settings& s, const Paths& p) {
  const PreparedData data = validated([&] { return prepare(s); });
  const LalrBenchResult res = lalr_bench(data.train, s.model, s.train, s.target);
  const fs::path dir = p.out.empty() ? fs::path("bqr_lalr") : p.out;
  std::ostringstream table, trace;
  table << preamble(s);
  write_lalr_bench_csv(table, s.data.source, res);
  trace << preamble(s);
  res.adaptive_trace.write_csv(trace);
  write_file(dir / "lalr_bench.csv", table.str());
  write_file(dir / "adaptive_trace.csv", trace.str());
  std::cout << table.str();
  return 0;
}

int cmd_smooth(const Settings& s, const Paths& p) {
  const Checkpoint ckpt = load_for(s, p, true);
  if (p.input.empty()) throw ValidationError("--input is required");
  LabeledDataset rows = validated([&] {
    std::ifstream in(p.input);
    if (!in) throw IoError("cannot open " + p.input.string());
    // Every column except labels, latents and exported quantiles is a feature.
    std::string line;
    while (std::getline(in, line) && !line.empty() && line.front() == '#') {
    }
    CsvOptions opts;
    opts.label_column.clear();
    opts.scale = false;
    opts.delimiter = s.data.delimiter;
    std::stringstream header(line);
    for (std::string col; std::getline(header, col, s.data.delimiter);) {
      if (col == "label" || col == "latent" || col == s.data.label_column ||
          col.rfind("q_", 0) == 0) {
        opts.ignore_columns.push_back(col);
      }
    }
    return load_csv(p.input, opts).dataset;
  });
  if (auto sc = scaling_from_json(ckpt.metadata)) rows.features = sc->apply(rows.features);
  if (rows.dims() != ckpt.net.input_dim()) {
    throw ValidationError(fmt::format("checkpoint expects {} features, input has {}",
                                      ckpt.net.input_dim(), rows.dims()));
  }

  const TauGrid& grid = ckpt.net.grid();
  if (0.5 * s.pi_level < grid[0] - 1e-12 || 1.0 - 0.5 * s.pi_level > grid[grid.size() - 1] + 1e-12) {
    throw ValidationError(fmt::format("pi level {} needs quantiles outside the checkpoint grid",
                                      s.pi_level));
  }
  constexpr int kPoints = 101;
  std::ostringstream body;
  body << preamble(s);
  std::vector<std::string> header{"row", "label", "delta", "mean", "variance", "pi_low", "pi_high"};
  for (int k = 0; k < kPoints; ++k) header.push_back(fmt::format("qs_{:.2f}", k / 100.0));
  body << fmt::format("{}\n", fmt::join(header, ","));

  const Eigen::MatrixXd preds = forward_batch(ckpt.net, rows.features);
  std::vector<std::string> fields;
  for (Eigen::Index i = 0; i < preds.rows(); ++i) {
    std::vector<double> v(preds.cols());
    for (Eigen::Index j = 0; j < preds.cols(); ++j) v[j] = preds(i, j);
    const LatentPrediction pred(v);
    const SmoothedQuantileFn sq = smooth(pred, grid, s.bandwidth);
    const ConfidenceReport rep = delta_score(pred, grid);
    const auto [lo, hi] = prediction_interval(pred, grid, s.pi_level);
    fields = {fmt::format("{}", i), fmt::format("{}", rep.predicted_label),
              fmt::format("{}", rep.delta), fmt::format("{}", conditional_mean(sq)),
              fmt::format("{}", conditional_stat(sq, Variance{})), fmt::format("{}", lo),
              fmt::format("{}", hi)};
    for (int k = 0; k < kPoints; ++k) fields.push_back(fmt::format("{}", sq(k / 100.0)));
    body << fmt::format("{}\n", fmt::join(fields, ","));
  }
  const fs::path out = p.out.empty() ? fs::path("smoothed.csv") : p.out;
  write_file(out, body.str());
  std::cerr << fmt::format("wrote {} rows to {}\n", preds.rows(), out.string());
  return 0;
}

}  // namespace bqr::cli
