#include "bqr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "bqr/data.hpp"
#include "bqr/error.hpp"

namespace bqr {

namespace {

std::string format_optional(const std::optional<double>& v) {
  return v ? fmt::format("{:.4f}", *v) : std::string("NA");
}

}  // namespace

CoverageTable coverage(const Eigen::VectorXd& latent,
                       const Eigen::MatrixXd& preds, const TauGrid& grid) {
  if (preds.rows() != latent.size() ||
      static_cast<std::size_t>(preds.cols()) != grid.size()) {
    throw ShapeError("coverage inputs are misaligned");
  }
  if (latent.size() == 0) throw ShapeError("coverage of an empty sample");
  CoverageTable table;
  table.tau.assign(grid.levels().begin(), grid.levels().end());
  for (Eigen::Index j = 0; j < preds.cols(); ++j) {
    const auto below = (latent.array() < preds.col(j).array()).count();
    table.coverage.push_back(static_cast<double>(below) /
                             static_cast<double>(latent.size()));
  }
  return table;
}

std::optional<double> r2_score(std::span<const double> observed,
                               std::span<const double> predicted) {
  if (observed.size() != predicted.size()) {
    throw ShapeError("r2 inputs are misaligned");
  }
  if (observed.size() < 2) return std::nullopt;
  const double mean = std::accumulate(observed.begin(), observed.end(), 0.0) /
                      static_cast<double>(observed.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (ss_tot <= 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

DeltaBinReport delta_report(std::span<const ConfidenceReport> reports,
                            std::span<const int> labels,
                            std::span<const double> thresholds,
                            std::span<const double> bin_centers) {
  if (reports.size() != labels.size()) {
    throw ShapeError("delta report inputs are misaligned");
  }
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 0.5)) throw DomainError("delta threshold outside [0, 0.5]");
  }
  const std::size_t n = reports.size();
  DeltaBinReport out;

  for (double t : thresholds) {
    RetentionRow row;
    row.threshold = t;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (reports[i].delta >= t) {
        ++row.retained;
        if (reports[i].predicted_label != labels[i]) ++wrong;
      }
    }
    row.retention = n == 0 ? 0.0
                           : static_cast<double>(row.retained) /
                                 static_cast<double>(n);
    if (row.retained > 0) {
      row.misclassification =
          static_cast<double>(wrong) / static_cast<double>(row.retained);
    }
    out.thresholds.push_back(row);
  }

  if (!bin_centers.empty()) {
    std::vector<std::size_t> count(bin_centers.size(), 0);
    std::vector<std::size_t> wrong(bin_centers.size(), 0);
    std::vector<double> delta_sum(bin_centers.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t b = 1; b < bin_centers.size(); ++b) {
        if (std::abs(reports[i].delta - bin_centers[b]) <
            std::abs(reports[i].delta - bin_centers[best])) {
          best = b;
        }
      }
      ++count[best];
      delta_sum[best] += reports[i].delta;
      if (reports[i].predicted_label != labels[i]) ++wrong[best];
    }
    std::vector<double> observed;
    std::vector<double> expected;
    for (std::size_t b = 0; b < bin_centers.size(); ++b) {
      DeltaBin bin;
      bin.center = bin_centers[b];
      bin.count = count[b];
      if (count[b] > 0) {
        const double c = static_cast<double>(count[b]);
        bin.misclassification = static_cast<double>(wrong[b]) / c;
        bin.mean_delta = delta_sum[b] / c;
        observed.push_back(*bin.misclassification);
        expected.push_back(0.5 - *bin.mean_delta);
      }
      out.bins.push_back(bin);
    }
    out.r2 = r2_score(observed, expected);
  }
  return out;
}

std::optional<double> roc_auc(std::span<const double> scores,
                              std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("AUC inputs are misaligned");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups, then the Mann-Whitney U statistic.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

std::optional<double> roc_auc_at_delta(std::span<const double> scores,
                                       std::span<const int> labels,
                                       std::span<const ConfidenceReport> reports,
                                       double delta_min) {
  if (scores.size() != labels.size() || scores.size() != reports.size()) {
    throw ShapeError("AUC inputs are misaligned");
  }
  if (!(delta_min >= 0.0 && delta_min <= 0.5)) {
    throw DomainError("delta_min outside [0, 0.5]");
  }
  std::vector<double> kept_scores;
  std::vector<int> kept_labels;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (reports[i].delta >= delta_min) {
      kept_scores.push_back(scores[i]);
      kept_labels.push_back(labels[i]);
    }
  }
  return roc_auc(kept_scores, kept_labels);
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw ShapeError("accuracy inputs are misaligned");
  if (truth.empty()) throw DomainError("accuracy of an empty sample");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double accuracy_from_scores(std::span<const double> scores,
                            std::span<const int> truth) {
  std::vector<int> predicted(scores.size());
  std::transform(scores.begin(), scores.end(), predicted.begin(),
                 [](double s) { return s > 0.0 ? 1 : 0; });
  return accuracy(predicted, truth);
}

void write_coverage_csv(std::ostream& out, const std::string& dataset,
                        const CoverageTable& table, bool header) {
  if (header) {
    out << "dataset";
    for (double tau : table.tau) out << ',' << quantile_column_name(tau);
    out << '\n';
  }
  out << dataset;
  for (double c : table.coverage) out << fmt::format(",{:.4f}", c);
  out << '\n';
}

void write_delta_report_csv(std::ostream& out, const std::string& dataset,
                            const DeltaBinReport& report, bool header) {
  if (header) {
    out << "dataset,rate";
    for (const auto& row : report.thresholds) out << fmt::format(",{:g}", row.threshold);
    out << ",r2\n";
  }
  out << dataset << ",m_r";
  for (const auto& row : report.thresholds) out << ',' << format_optional(row.misclassification);
  out << ',' << format_optional(report.r2) << '\n';
  out << dataset << ",r_r";
  for (const auto& row : report.thresholds) out << fmt::format(",{:.4f}", row.retention);
  out << ",NA\n";
}

}  // namespace bqr
