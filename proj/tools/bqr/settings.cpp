#include "settings.hpp"

#include <charconv>
#include <fstream>

#include <fmt/format.h>

#include "bqr/error.hpp"

namespace bqr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json default_config() {
  return {
      {"dataset",
       {{"source", "D1"},
        {"n", 7000},
        {"seed", 11},
        {"threshold", "auto"},
        {"csv", ""},
        {"label_column", "label"},
        {"latent_column", ""},
        {"delimiter", ","},
        {"dims", 2},
        {"separation", 0.5},
        {"spread", 0.15}}},
      {"split", {{"seed", 3}, {"train_fraction", 0.7}, {"n_train", 0}}},
      {"model",
       {{"trunk_widths", {64, 64}},
        {"grid", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}},
        {"lambda", 1.0},
        {"loss", "bqr"},
        {"init_seed", 5}}},
      {"train",
       {{"lr", "lalr"},
        {"epochs", 800},
        {"batch_size", 128},
        {"seed", 9},
        {"kz_floor", 1e-3},
        {"eta_cap", 10.0}}},
      {"noise", {{"fractions", {0.0, 0.1, 0.2, 0.3, 0.4}}, {"seed", 21}}},
      {"bench", {{"target", 0.95}}},
      {"smooth", {{"bandwidth", 0.1}, {"pi_level", 0.5}}},
  };
}

std::string config_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

namespace {

// "median" -> 0.5, "p80" -> 0.8; empty for "none".
std::optional<double> threshold_quantile(const std::string& spec) {
  if (spec == "median") return 0.5;
  if (spec.size() > 1 && spec[0] == 'p') {
    int pct = -1;
    const auto* end = spec.data() + spec.size();
    const auto [ptr, ec] = std::from_chars(spec.data() + 1, end, pct);
    if (ec == std::errc() && ptr == end && pct > 0 && pct < 100) return pct / 100.0;
  }
  throw ValidationError("threshold must be a number, 'none', 'median' or 'pNN', got '" +
                        spec + "'");
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void validate_threshold(const json& t) {
  if (t.is_number()) return;
  check(t.is_string(), "dataset.threshold must be a string or a number");
  const auto spec = t.get<std::string>();
  if (spec == "auto" || spec == "none") return;
  threshold_quantile(spec);
}

}  // namespace

Settings resolve(const std::optional<fs::path>& config_file, const json& overrides) {
  json doc = default_config();
  if (config_file) {
    std::ifstream in(*config_file);
    check(static_cast<bool>(in), "cannot open config file " + config_file->string());
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError("config file " + config_file->string() +
                            " is not valid JSON: " + e.what());
    }
    check(file.is_object(), "config file must hold a JSON object");
    for (const auto& [section, _] : file.items()) {
      check(doc.contains(section), "unknown config section '" + section + "'");
    }
    doc.merge_patch(file);
  }
  doc.merge_patch(overrides);

  Settings s;
  try {
    const json& d = doc.at("dataset");
    s.data.source = d.at("source").get<std::string>();
    s.data.n = d.at("n").get<std::size_t>();
    s.data.seed = d.at("seed").get<std::uint64_t>();
    s.data.threshold = d.at("threshold");
    s.data.csv = d.at("csv").get<std::string>();
    s.data.label_column = d.at("label_column").get<std::string>();
    s.data.latent_column = d.at("latent_column").get<std::string>();
    const auto delim = d.at("delimiter").get<std::string>();
    check(delim.size() == 1, "dataset.delimiter must be a single character");
    s.data.delimiter = delim[0];
    s.data.dims = d.at("dims").get<std::size_t>();
    s.data.separation = d.at("separation").get<double>();
    s.data.spread = d.at("spread").get<double>();

    const json& sp = doc.at("split");
    s.split.seed = sp.at("seed").get<std::uint64_t>();
    s.split.train_fraction = sp.at("train_fraction").get<double>();
    s.split.n_train = sp.at("n_train").get<std::size_t>();

    const json& m = doc.at("model");
    s.model.trunk_widths = m.at("trunk_widths").get<std::vector<std::size_t>>();
    s.model.grid = TauGrid(m.at("grid").get<std::vector<double>>());
    s.model.lambda = m.at("lambda").get<double>();
    const auto loss = m.at("loss").get<std::string>();
    check(loss == "bqr" || loss == "bce", "model.loss must be 'bqr' or 'bce'");
    s.model.kind = loss == "bqr" ? LossKind::kBqr : LossKind::kBce;
    s.model.init_seed = m.at("init_seed").get<std::uint64_t>();

    const json& t = doc.at("train");
    const json& lr = t.at("lr");
    if (lr.is_string()) {
      check(lr.get<std::string>() == "lalr", "train.lr must be 'lalr' or a positive number");
      s.train.lr = LipschitzAdaptiveRate{};
    } else {
      s.train.lr = FixedRate{lr.get<double>()};
    }
    s.train.epochs = t.at("epochs").get<int>();
    s.train.batch_size = t.at("batch_size").get<int>();
    s.train.seed = t.at("seed").get<std::uint64_t>();
    s.train.kz_floor = t.at("kz_floor").get<double>();
    s.train.eta_cap = t.at("eta_cap").get<double>();

    s.fractions = doc.at("noise").at("fractions").get<std::vector<double>>();
    s.noise_seed = doc.at("noise").at("seed").get<std::uint64_t>();
    s.target = doc.at("bench").at("target").get<double>();
    s.bandwidth = doc.at("smooth").at("bandwidth").get<double>();
    s.pi_level = doc.at("smooth").at("pi_level").get<double>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }

  // Cross-field checks against every module precondition.
  const bool csv = s.data.source == "csv";
  if (!csv && s.data.source != "blobs") {
    try {
      parse_dataset_id(s.data.source);
    } catch (const UnknownDataset& e) {
      throw ValidationError(std::string(e.what()) + ", blobs or csv");
    }
  }
  check(!csv || !s.data.csv.empty(), "dataset.csv must name a file when source is csv");
  check(!csv || fs::exists(s.data.csv), "CSV file not found: " + s.data.csv.string());
  check(csv || s.data.n > 0, "dataset.n must be positive");
  check(s.data.dims > 0, "dataset.dims must be positive");
  check(s.data.spread > 0, "dataset.spread must be positive");
  validate_threshold(s.data.threshold);
  check(s.split.train_fraction > 0 && s.split.train_fraction < 1,
        "split.train_fraction must lie in (0,1)");
  check(csv || s.split.n_train < s.data.n, "split.n_train must be below dataset.n");
  check(!s.model.trunk_widths.empty(), "model.trunk_widths must not be empty");
  for (auto w : s.model.trunk_widths) check(w > 0, "model.trunk_widths entries must be positive");
  if (s.model.kind == LossKind::kBce) s.model = s.model.bce_baseline();
  try {
    s.model.loss_spec().validate();
    s.train.validate();
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
  for (double f : s.fractions) {
    check(f >= 0 && f <= 0.5, fmt::format("noise fraction {} outside [0, 0.5]", f));
  }
  check(s.target > 0 && s.target <= 1, "bench.target must lie in (0, 1]");
  check(s.bandwidth > 0, "smooth.bandwidth must be positive");
  check(s.pi_level > 0 && s.pi_level < 1, "smooth.pi_level must lie in (0,1)");

  s.doc = doc;
  s.hash = config_hash(doc);
  return s;
}

LabeledDataset load_dataset(const DatasetSettings& data) {
  const std::string tspec =
      data.threshold.is_string() ? data.threshold.get<std::string>() : std::string();
  if (data.source == "blobs") {
    return two_blobs(data.n, data.dims, data.separation, data.spread, data.seed);
  }
  if (data.source != "csv") {
    LabeledDataset ds = gen_dataset(parse_dataset_id(data.source), data.n, data.seed);
    if (data.threshold.is_number()) return threshold_labels(std::move(ds), data.threshold.get<double>());
    check(tspec != "none", "simulated data needs a threshold");
    const double q = tspec == "auto" ? 0.5 : *threshold_quantile(tspec);
    const double mu = latent_quantile(ds, q);
    return threshold_labels(std::move(ds), mu);
  }

  CsvOptions opts;
  opts.delimiter = data.delimiter;
  opts.scale = false;
  if (tspec == "auto" || tspec == "none") {
    opts.label_column = data.label_column;
    if (!data.latent_column.empty()) opts.latent_column = data.latent_column;
    return load_csv(data.csv, opts).dataset;
  }
  // A real-valued target: keep it as the latent and threshold it.
  opts.label_column.clear();
  opts.latent_column = data.label_column;
  LabeledDataset ds = load_csv(data.csv, opts).dataset;
  const double mu = data.threshold.is_number() ? data.threshold.get<double>()
                                               : latent_quantile(ds, *threshold_quantile(tspec));
  return threshold_labels(std::move(ds), mu);
}

PreparedData prepare(const Settings& s) {
  PreparedData out;
  LabeledDataset ds = load_dataset(s.data);
  auto split = s.split.n_train > 0 ? split_dataset(ds, s.split.n_train, s.split.seed)
                                   : split_fraction(ds, s.split.train_fraction, s.split.seed);
  out.train = std::move(split.train);
  out.test = std::move(split.test);
  if (s.data.source == "csv") {
    FeatureScaling sc = FeatureScaling::fit(out.train.features);
    out.train.features = sc.apply(out.train.features);
    out.test.features = sc.apply(out.test.features);
    out.scaling = std::move(sc);
  }
  return out;
}

nlohmann::json scaling_to_json(const FeatureScaling& sc) {
  return {{"lo", sc.lo}, {"hi", sc.hi}};
}

std::optional<FeatureScaling> scaling_from_json(const nlohmann::json& metadata) {
  if (!metadata.contains("feature_scaling")) return std::nullopt;
  const auto& j = metadata.at("feature_scaling");
  return FeatureScaling{j.at("lo").get<std::vector<double>>(),
                        j.at("hi").get<std::vector<double>>()};
}

}  // namespace bqr::cli
