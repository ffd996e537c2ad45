#include "bqr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "bqr/error.hpp"

namespace bqr {

namespace {

constexpr std::string_view kDatasetNames[] = {"D1", "D2", "D3",
                                              "D4", "D5", "D6"};

double d5_base(double x) {
  const double u = 3.0 * x;
  return 2.0 * ((1.0 - u + 2.0 * u * u) * std::exp(-0.5 * u * u) - 1.5);
}

double draw_noise(DatasetId id, std::mt19937_64& rng) {
  switch (id) {
    case DatasetId::kD1:
      return std::normal_distribution<double>(0.0, 1.0)(rng);
    case DatasetId::kD2:
    case DatasetId::kD4:
      return std::normal_distribution<double>(0.0, 0.5)(rng);
    case DatasetId::kD3:
      return std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
    case DatasetId::kD5:
      return std::normal_distribution<double>(0.0, 0.25)(rng);
    case DatasetId::kD6: {
      // chi-square with 2 degrees of freedom by inversion: -2 ln U
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      return -2.0 * std::log1p(-u) / 4.0;
    }
  }
  return 0.0;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(std::string_view(line).substr(
        start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& field, std::size_t row,
                    const std::string& column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError(fmt::format("row {}: column '{}' has non-numeric value '{}'",
                                 row, column, field),
                     row);
  }
  return value;
}

double population_mean(const Eigen::VectorXd& v) { return v.mean(); }

double population_std(const Eigen::VectorXd& v, double mean) {
  return std::sqrt((v.array() - mean).square().mean());
}

}  // namespace

void LabeledDataset::validate() const {
  if (features.rows() == 0) throw SchemaError("dataset has no rows");
  if (!features.allFinite()) throw SchemaError("features must be finite");
  if (!labels.empty() && labels.size() != rows()) {
    throw SchemaError("label count does not match row count");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw SchemaError("labels must be 0 or 1");
  }
  if (latent && latent->size() != rows()) {
    throw SchemaError("latent count does not match row count");
  }
  if (threshold && !latent) {
    throw SchemaError("a threshold is recorded without a latent column");
  }
}

DatasetId parse_dataset_id(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kDatasetNames); ++i) {
    if (name == kDatasetNames[i]) return static_cast<DatasetId>(i);
  }
  throw UnknownDataset(fmt::format(
      "unknown dataset id '{}'; valid ids are D1, D2, D3, D4, D5, D6", name));
}

std::string_view to_string(DatasetId id) {
  return kDatasetNames[static_cast<std::size_t>(id)];
}

double dataset_signal(DatasetId id, double x) {
  switch (id) {
    case DatasetId::kD1:
      return 5.0 * std::sin(8.0 * x);
    case DatasetId::kD2: {
      const double u = 4.0 * x;
      return u * u / 2.0;
    }
    case DatasetId::kD3: {
      const double u = 4.0 * x;
      return std::sqrt(u * u + 5.0) - 2.5;
    }
    case DatasetId::kD4:
      return x == 0.0 ? 0.0 : 2.0 * x * std::sin(1.0 / (2.0 * x));
    case DatasetId::kD5:
    case DatasetId::kD6:
      return d5_base(x);
  }
  throw UnknownDataset("unknown dataset id");
}

LabeledDataset gen_dataset(DatasetId id, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("dataset size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  LabeledDataset ds;
  ds.name = std::string(to_string(id));
  ds.features.resize(static_cast<Eigen::Index>(n), 1);
  std::vector<double> latent(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ux(rng);
    ds.features(static_cast<Eigen::Index>(i), 0) = x;
    latent[i] = dataset_signal(id, x) + draw_noise(id, rng);
  }
  ds.latent = std::move(latent);
  return ds;
}

LabeledDataset threshold_labels(LabeledDataset ds, double mu) {
  if (!ds.latent) throw MissingLatent("thresholding needs a latent column");
  ds.labels.resize(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    ds.labels[i] = (*ds.latent)[i] <= mu ? 0 : 1;
  }
  ds.threshold = mu;
  return ds;
}

double latent_quantile(const LabeledDataset& ds, double q) {
  if (!ds.latent || ds.latent->empty()) {
    throw MissingLatent("latent quantile needs a latent column");
  }
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level outside [0,1]");
  std::vector<double> sorted = *ds.latent;
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<std::size_t> flip_indices(std::size_t n, const NoiseSpec& spec) {
  if (!(spec.flip_fraction >= 0.0 && spec.flip_fraction <= 0.5)) {
    throw DomainError(fmt::format("flip fraction {} outside [0, 0.5]",
                                  spec.flip_fraction));
  }
  const auto count = static_cast<std::size_t>(
      std::llround(spec.flip_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

LabeledDataset flip_labels(const LabeledDataset& ds, const NoiseSpec& spec) {
  if (!ds.has_labels()) throw SchemaError("flip_labels needs labels");
  LabeledDataset out = ds;
  for (std::size_t i : flip_indices(ds.rows(), spec)) {
    out.labels[i] = 1 - out.labels[i];
  }
  return out;
}

LabeledDataset subset(const LabeledDataset& ds,
                      std::span<const std::size_t> rows) {
  LabeledDataset out;
  out.name = ds.name;
  out.threshold = ds.threshold;
  out.features.resize(static_cast<Eigen::Index>(rows.size()),
                      ds.features.cols());
  if (ds.has_labels()) out.labels.reserve(rows.size());
  if (ds.latent) out.latent.emplace().reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t r = rows[k];
    if (r >= ds.rows()) throw ShapeError("subset row index out of range");
    out.features.row(static_cast<Eigen::Index>(k)) =
        ds.features.row(static_cast<Eigen::Index>(r));
    if (ds.has_labels()) out.labels.push_back(ds.labels[r]);
    if (ds.latent) out.latent->push_back((*ds.latent)[r]);
  }
  return out;
}

TrainTestSplit split_dataset(const LabeledDataset& ds, std::size_t n_train,
                             std::uint64_t seed) {
  if (n_train == 0 || n_train >= ds.rows()) {
    throw DomainError(fmt::format(
        "train size {} must be in [1, {})", n_train, ds.rows()));
  }
  std::vector<std::size_t> order(ds.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::span<const std::size_t> all(order);
  return {subset(ds, all.first(n_train)), subset(ds, all.subspan(n_train))};
}

TrainTestSplit split_fraction(const LabeledDataset& ds, double train_fraction,
                              std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DomainError("train fraction must lie in (0,1)");
  }
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(ds.rows())));
  return split_dataset(ds, std::clamp<std::size_t>(n_train, 1, ds.rows() - 1),
                       seed);
}

FeatureScaling FeatureScaling::fit(const Eigen::MatrixXd& features) {
  FeatureScaling s;
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    s.lo.push_back(features.col(c).minCoeff());
    s.hi.push_back(features.col(c).maxCoeff());
  }
  return s;
}

Eigen::MatrixXd FeatureScaling::apply(const Eigen::MatrixXd& features) const {
  if (static_cast<std::size_t>(features.cols()) != lo.size()) {
    throw ShapeError("scaling was fitted on a different column count");
  }
  Eigen::MatrixXd out(features.rows(), features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const auto k = static_cast<std::size_t>(c);
    const double span = hi[k] - lo[k];
    if (span <= 0.0) {
      out.col(c).setZero();
      continue;
    }
    out.col(c) = ((features.col(c).array() - lo[k]) * (2.0 / span) - 1.0)
                     .cwiseMax(-1.0)
                     .cwiseMin(1.0);
  }
  return out;
}

LoadedCsv load_csv(const std::filesystem::path& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  const auto is_comment = [&](const std::string& l) {
    return opts.comment != '\0' && !l.empty() && l.front() == opts.comment;
  };
  std::string line;
  std::size_t row_number = 0;
  do {
    ++row_number;
    if (!std::getline(in, line)) {
      throw ParseError(path.string() + ": missing header row", row_number);
    }
  } while (is_comment(line));
  const std::vector<std::string> header = split_line(line, opts.delimiter);

  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const bool want_labels = !opts.label_column.empty();
  std::optional<std::size_t> label_col;
  if (want_labels) label_col = find_column(opts.label_column);
  if (want_labels && !label_col) {
    throw SchemaError("label column '" + opts.label_column +
                      "' not found in " + path.string());
  }
  std::optional<std::size_t> latent_col;
  if (opts.latent_column) {
    latent_col = find_column(*opts.latent_column);
    if (!latent_col) {
      throw SchemaError("latent column '" + *opts.latent_column +
                        "' not found in " + path.string());
    }
  }
  std::vector<std::size_t> feature_cols;
  LoadedCsv result;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if ((label_col && c == *label_col) || (latent_col && c == *latent_col)) continue;
    if (std::find(opts.ignore_columns.begin(), opts.ignore_columns.end(),
                  header[c]) != opts.ignore_columns.end()) {
      continue;
    }
    feature_cols.push_back(c);
    result.feature_names.push_back(header[c]);
  }
  if (feature_cols.empty()) throw SchemaError("no feature columns in " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  std::vector<double> latents;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty() || is_comment(line)) continue;
    const auto fields = split_line(line, opts.delimiter);
    if (fields.size() != header.size()) {
      throw ParseError(fmt::format("{}: row {} has {} fields, header has {}",
                                   path.string(), row_number, fields.size(),
                                   header.size()),
                       row_number);
    }
    std::vector<double> row;
    row.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      row.push_back(parse_number(fields[c], row_number, header[c]));
    }
    rows.push_back(std::move(row));
    if (label_col) {
      targets.push_back(
          parse_number(fields[*label_col], row_number, header[*label_col]));
    }
    if (latent_col) {
      latents.push_back(
          parse_number(fields[*latent_col], row_number, header[*latent_col]));
    }
  }
  if (rows.empty()) throw SchemaError(path.string() + " has no data rows");

  LabeledDataset& ds = result.dataset;
  ds.name = path.stem().string();
  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < feature_cols.size(); ++c) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
    }
  }

  if (!label_col) {
    if (latent_col) ds.latent = std::move(latents);
  } else if (opts.threshold && !latent_col) {
    ds.latent = targets;
    ds = threshold_labels(std::move(ds), *opts.threshold);
  } else {
    ds.labels.reserve(targets.size());
    for (std::size_t r = 0; r < targets.size(); ++r) {
      const double t = targets[r];
      if (t != 0.0 && t != 1.0) {
        throw SchemaError(fmt::format(
            "label column '{}' is not binary (row {} has {}); pass a "
            "threshold to binarize a real-valued target",
            opts.label_column, r + 2, t));
      }
      ds.labels.push_back(static_cast<int>(t));
    }
    if (latent_col) {
      ds.latent = std::move(latents);
      ds.threshold = opts.threshold;
    }
  }

  if (opts.scale) {
    FeatureScaling scaling =
        opts.scaling ? *opts.scaling : FeatureScaling::fit(ds.features);
    ds.features = scaling.apply(ds.features);
    result.scaling = std::move(scaling);
  }
  ds.validate();
  return result;
}

std::string quantile_column_name(double tau) {
  return fmt::format("q_{:.2f}", tau);
}

void write_csv(const LabeledDataset& ds, const std::filesystem::path& path,
               const Eigen::MatrixXd* quantiles, const TauGrid* grid) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(ds, out, quantiles, grid);
  if (!out) throw IoError("failed writing " + path.string());
}

void write_csv(const LabeledDataset& ds, std::ostream& out,
               const Eigen::MatrixXd* quantiles, const TauGrid* grid) {
  if (quantiles != nullptr) {
    if (grid == nullptr || static_cast<std::size_t>(quantiles->cols()) != grid->size() ||
        static_cast<std::size_t>(quantiles->rows()) != ds.rows()) {
      throw ShapeError("quantile matrix does not match the rows or grid");
    }
  }

  std::vector<std::string> header;
  if (ds.dims() == 1) {
    header.emplace_back("x");
  } else {
    for (std::size_t c = 0; c < ds.dims(); ++c) header.push_back(fmt::format("x{}", c + 1));
  }
  if (ds.has_labels()) header.emplace_back("label");
  if (ds.latent) header.emplace_back("latent");
  if (quantiles != nullptr) {
    for (double tau : grid->levels()) header.push_back(quantile_column_name(tau));
  }
  out << fmt::format("{}\n", fmt::join(header, ","));

  std::vector<std::string> fields;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    fields.clear();
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
      fields.push_back(fmt::format("{}", ds.features(row, c)));
    }
    if (ds.has_labels()) fields.push_back(fmt::format("{}", ds.labels[r]));
    if (ds.latent) fields.push_back(fmt::format("{}", (*ds.latent)[r]));
    if (quantiles != nullptr) {
      for (Eigen::Index j = 0; j < quantiles->cols(); ++j) {
        fields.push_back(fmt::format("{}", (*quantiles)(row, j)));
      }
    }
    out << fmt::format("{}\n", fmt::join(fields, ","));
  }
}

NormalizedCoverage normalize_for_coverage(const LabeledDataset& ds,
                                          const Eigen::MatrixXd& preds,
                                          const TauGrid& grid) {
  if (!ds.latent || !ds.threshold) {
    throw MissingLatent("coverage normalization needs a latent and threshold");
  }
  if (static_cast<std::size_t>(preds.rows()) != ds.rows() ||
      static_cast<std::size_t>(preds.cols()) != grid.size()) {
    throw ShapeError("prediction matrix does not match the dataset or grid");
  }
  const std::size_t median = grid.median_index();

  Eigen::VectorXd shifted = Eigen::Map<const Eigen::VectorXd>(
      ds.latent->data(), static_cast<Eigen::Index>(ds.latent->size()));
  shifted.array() -= *ds.threshold;
  const double lat_mean = population_mean(shifted);
  const double lat_std = population_std(shifted, lat_mean);

  const Eigen::VectorXd med = preds.col(static_cast<Eigen::Index>(median));
  const double med_mean = population_mean(med);
  const double med_std = population_std(med, med_mean);
  if (!(lat_std > 0.0) || !(med_std > 0.0)) {
    throw DegenerateDistribution(
        "zero spread in the latent or the median predictions");
  }

  NormalizedCoverage out;
  out.latent = (shifted.array() - lat_mean) / lat_std;
  out.preds = (preds.array() - med_mean) / med_std;
  return out;
}

}  // namespace bqr
