#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "bqr/data.hpp"
#include "bqr/error.hpp"

namespace fs = std::filesystem;

namespace {

using bqr::DatasetId;
using bqr::LabeledDataset;

// Noise mean and variance of each generator, from its distribution.
struct NoiseMoments {
  double mean;
  double var;
};

NoiseMoments noise_moments(DatasetId id) {
  switch (id) {
    case DatasetId::kD1: return {0.0, 1.0};
    case DatasetId::kD2: return {0.0, 0.25};
    case DatasetId::kD3: return {0.0, 0.6 * 0.6 / 12.0};
    case DatasetId::kD4: return {0.0, 0.25};
    case DatasetId::kD5: return {0.0, 0.0625};
    case DatasetId::kD6: return {0.5, 0.25};  // chi^2(2)/4
  }
  return {0, 0};
}

// E[g(X)] for X ~ U(-1, 1) by adaptive Gauss-Kronrod.
double uniform_expectation(const std::function<double(double)>& g) {
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  // Split at 0: D4's signal oscillates infinitely often there.
  return 0.5 * (Quad::integrate(g, -1.0, 0.0, 25, 1e-12) +
                Quad::integrate(g, 0.0, 1.0, 25, 1e-12));
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("bqr_data_test_" + name);
}

LabeledDataset from_latent(std::vector<double> latent) {
  LabeledDataset ds;
  ds.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(latent.size()), 1);
  ds.latent = std::move(latent);
  return ds;
}

TEST(DatasetSignal, FormulasAtKnownPoints) {
  EXPECT_DOUBLE_EQ(bqr::dataset_signal(DatasetId::kD1, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(bqr::dataset_signal(DatasetId::kD2, 0.5), 2.0);
  EXPECT_NEAR(bqr::dataset_signal(DatasetId::kD3, 0.0), std::sqrt(5.0) - 2.5, 1e-15);
  EXPECT_DOUBLE_EQ(bqr::dataset_signal(DatasetId::kD4, 0.0), 0.0);
  EXPECT_NEAR(bqr::dataset_signal(DatasetId::kD4, 0.25), 0.5 * std::sin(2.0), 1e-15);
  EXPECT_NEAR(bqr::dataset_signal(DatasetId::kD5, 0.0), 2 * (1 - 1.5), 1e-15);
  EXPECT_EQ(bqr::dataset_signal(DatasetId::kD5, 0.3), bqr::dataset_signal(DatasetId::kD6, 0.3));
}

TEST(DatasetId, ParseAndErrors) {
  EXPECT_EQ(bqr::parse_dataset_id("D3"), DatasetId::kD3);
  EXPECT_EQ(bqr::to_string(DatasetId::kD6), "D6");
  try {
    bqr::parse_dataset_id("D9");
    FAIL();
  } catch (const bqr::UnknownDataset& e) {
    EXPECT_NE(std::string(e.what()).find("D1"), std::string::npos);
  }
}

TEST(GenDataset, ReproducibleAndInRange) {
  const auto a = bqr::gen_dataset(DatasetId::kD1, 500, 7);
  const auto b = bqr::gen_dataset(DatasetId::kD1, 500, 7);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(*a.latent, *b.latent);
  EXPECT_FALSE(a.has_labels());
  EXPECT_LE(a.features.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_THROW(bqr::gen_dataset(DatasetId::kD1, 0, 7), bqr::DomainError);
}

class GeneratorMoments : public ::testing::TestWithParam<DatasetId> {};

TEST_P(GeneratorMoments, MeanAndVarianceMatchQuadrature) {
  const DatasetId id = GetParam();
  const std::size_t n = 100000;
  const auto ds = bqr::gen_dataset(id, n, 2024);
  const auto& z = *ds.latent;

  const auto s = [id](double x) { return bqr::dataset_signal(id, x); };
  const NoiseMoments nm = noise_moments(id);
  const double m1 = uniform_expectation(s);
  const double m2 = uniform_expectation([&](double x) { return s(x) * s(x); });
  const double true_mean = m1 + nm.mean;
  const double true_var = m2 - m1 * m1 + nm.var;

  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
  double c2 = 0, c4 = 0;
  for (double v : z) {
    const double d = v - mean;
    c2 += d * d;
    c4 += d * d * d * d;
  }
  c2 /= n;
  c4 /= n;
  EXPECT_NEAR(mean, true_mean, 3.0 * std::sqrt(c2 / n));
  EXPECT_NEAR(c2, true_var, 3.0 * std::sqrt((c4 - c2 * c2) / n));
}

INSTANTIATE_TEST_SUITE_P(AllGenerators, GeneratorMoments,
                         ::testing::Values(DatasetId::kD1, DatasetId::kD2, DatasetId::kD3,
                                           DatasetId::kD4, DatasetId::kD5, DatasetId::kD6));

TEST(ThresholdLabels, BoundaryGoesToClassZero) {
  auto ds = bqr::threshold_labels(from_latent({-1, 0, 1}), 0.0);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(ds.threshold, 0.0);
  ds = bqr::threshold_labels(from_latent({-1, 0, 1}), -1e300);
  EXPECT_EQ(ds.labels, (std::vector<int>{1, 1, 1}));
  ds = bqr::threshold_labels(from_latent({-1, 0, 1}), 1.0);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 0, 0}));
}

TEST(ThresholdLabels, MissingLatent) {
  LabeledDataset ds;
  ds.features = Eigen::MatrixXd::Zero(2, 1);
  EXPECT_THROW(bqr::threshold_labels(ds, 0.0), bqr::MissingLatent);
}

TEST(FlipLabels, CountsAndDeterminism) {
  auto ds = bqr::threshold_labels(bqr::gen_dataset(DatasetId::kD1, 10, 1), 0.0);
  EXPECT_EQ(bqr::flip_labels(ds, {0.0, 3}).labels, ds.labels);
  const auto flipped = bqr::flip_labels(ds, {0.5, 3});
  int diff = 0;
  for (std::size_t i = 0; i < 10; ++i) diff += flipped.labels[i] != ds.labels[i];
  EXPECT_EQ(diff, 5);
  EXPECT_EQ(bqr::flip_indices(10, {0.5, 3}), bqr::flip_indices(10, {0.5, 3}));
  EXPECT_EQ(bqr::flip_labels(flipped, {0.5, 3}).labels, ds.labels);
  EXPECT_THROW(bqr::flip_labels(ds, {0.6, 3}), bqr::DomainError);
  EXPECT_THROW(bqr::flip_labels(ds, {-0.1, 3}), bqr::DomainError);
}

TEST(FlipIndices, DistinctAndSorted) {
  const auto idx = bqr::flip_indices(1000, {0.3, 9});
  ASSERT_EQ(idx.size(), 300u);
  for (std::size_t i = 1; i < idx.size(); ++i) EXPECT_LT(idx[i - 1], idx[i]);
}

TEST(Split, PartitionsRows) {
  auto ds = bqr::threshold_labels(bqr::gen_dataset(DatasetId::kD2, 100, 1), 1.0);
  const auto s = bqr::split_dataset(ds, 70, 5);
  EXPECT_EQ(s.train.rows(), 70u);
  EXPECT_EQ(s.test.rows(), 30u);
  std::vector<double> xs;
  for (const auto* part : {&s.train, &s.test}) {
    for (Eigen::Index i = 0; i < part->features.rows(); ++i) xs.push_back(part->features(i, 0));
  }
  std::vector<double> orig(ds.features.data(), ds.features.data() + 100);
  std::sort(xs.begin(), xs.end());
  std::sort(orig.begin(), orig.end());
  EXPECT_EQ(xs, orig);
  const auto f = bqr::split_fraction(ds, 0.7, 5);
  EXPECT_EQ(f.train.rows(), 70u);
}

TEST(FeatureScaling, AffineAndClamped) {
  Eigen::MatrixXd m(3, 2);
  m << 0, 4, 5, 4, 10, 4;
  const auto sc = bqr::FeatureScaling::fit(m);
  const Eigen::MatrixXd out = sc.apply(m);
  EXPECT_DOUBLE_EQ(out(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(out(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(out(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(out(1, 1), 0.0);
  Eigen::MatrixXd wide(1, 2);
  wide << 20, 4;
  EXPECT_DOUBLE_EQ(sc.apply(wide)(0, 0), 1.0);
}

TEST(LoadCsv, ScalesFeaturesAndKeepsLabels) {
  const auto path = temp_file("basic.csv");
  std::ofstream(path) << "f,label\n0,0\n5,1\n10,1\n";
  const auto loaded = bqr::load_csv(path, {});
  EXPECT_EQ(loaded.dataset.labels, (std::vector<int>{0, 1, 1}));
  EXPECT_DOUBLE_EQ(loaded.dataset.features(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(loaded.dataset.features(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(loaded.dataset.features(2, 0), 1.0);
  EXPECT_EQ(loaded.feature_names, (std::vector<std::string>{"f"}));
  ASSERT_TRUE(loaded.scaling.has_value());
  fs::remove(path);
}

TEST(LoadCsv, RealTargetWithThreshold) {
  const auto path = temp_file("target.csv");
  std::ofstream(path) << "a;b;y\n1;2;3.5\n2;1;9\n3;0;12\n";
  bqr::CsvOptions opts;
  opts.label_column = "y";
  opts.delimiter = ';';
  opts.threshold = 9.0;
  const auto loaded = bqr::load_csv(path, opts);
  EXPECT_EQ(loaded.dataset.labels, (std::vector<int>{0, 0, 1}));
  ASSERT_TRUE(loaded.dataset.latent.has_value());
  EXPECT_EQ(*loaded.dataset.latent, (std::vector<double>{3.5, 9, 12}));
  EXPECT_EQ(loaded.dataset.dims(), 2u);

  opts.threshold.reset();
  EXPECT_THROW(bqr::load_csv(path, opts), bqr::SchemaError);
  fs::remove(path);
}

TEST(LoadCsv, Errors) {
  EXPECT_THROW(bqr::load_csv(temp_file("does_not_exist.csv"), {}), bqr::IoError);
  const auto path = temp_file("bad.csv");
  std::ofstream(path) << "x,label\n0.1,0\nabc,1\n";
  try {
    bqr::load_csv(path, {});
    FAIL();
  } catch (const bqr::ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  std::ofstream(path) << "x,label\n0.1,0\n0.2\n";
  EXPECT_THROW(bqr::load_csv(path, {}), bqr::ParseError);
  std::ofstream(path) << "x,y\n0.1,0\n";
  EXPECT_THROW(bqr::load_csv(path, {}), bqr::SchemaError);
  fs::remove(path);
}

TEST(Csv, RoundTrip) {
  auto ds = bqr::threshold_labels(bqr::gen_dataset(DatasetId::kD5, 300, 4), 0.0);
  const auto path = temp_file("roundtrip.csv");
  bqr::write_csv(ds, path);
  bqr::CsvOptions opts;
  opts.scale = false;
  opts.latent_column = "latent";
  const auto back = bqr::load_csv(path, opts);
  EXPECT_EQ(back.dataset.labels, ds.labels);
  EXPECT_LE((back.dataset.features - ds.features).cwiseAbs().maxCoeff(), 1e-12);
  ASSERT_TRUE(back.dataset.latent.has_value());
  EXPECT_EQ(*back.dataset.latent, *ds.latent);
  fs::remove(path);
}

TEST(Csv, QuantileColumns) {
  EXPECT_EQ(bqr::quantile_column_name(0.1), "q_0.10");
  EXPECT_EQ(bqr::quantile_column_name(0.9), "q_0.90");
  auto ds = bqr::threshold_labels(bqr::gen_dataset(DatasetId::kD1, 4, 4), 0.0);
  const auto grid = bqr::TauGrid::uniform(3);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(4, 3);
  const auto path = temp_file("quantiles.csv");
  bqr::write_csv(ds, path, &q, &grid);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x,label,latent,q_0.25,q_0.50,q_0.75");
  fs::remove(path);
}

TEST(NormalizeForCoverage, StandardizesLatentAndMedian) {
  auto ds = bqr::threshold_labels(bqr::gen_dataset(DatasetId::kD2, 400, 8), 1.5);
  const auto grid = bqr::TauGrid::uniform(3);
  Eigen::MatrixXd preds = Eigen::MatrixXd::Random(400, 3) * 3.0;
  preds.array() += 2.0;
  const auto norm = bqr::normalize_for_coverage(ds, preds, grid);
  const auto stats = [](const Eigen::VectorXd& v) {
    const double m = v.mean();
    return std::pair{m, std::sqrt((v.array() - m).square().mean())};
  };
  auto [lm, ls] = stats(norm.latent);
  EXPECT_NEAR(lm, 0.0, 1e-9);
  EXPECT_NEAR(ls, 1.0, 1e-9);
  auto [qm, qs] = stats(norm.preds.col(1));
  EXPECT_NEAR(qm, 0.0, 1e-9);
  EXPECT_NEAR(qs, 1.0, 1e-9);
  // Other columns share the median column's affine map.
  const double scale = (preds(0, 0) - preds(1, 0)) / (norm.preds(0, 0) - norm.preds(1, 0));
  const double scale_med = (preds(0, 1) - preds(1, 1)) / (norm.preds(0, 1) - norm.preds(1, 1));
  EXPECT_NEAR(scale, scale_med, 1e-9);
}

TEST(NormalizeForCoverage, DegenerateLatent) {
  auto ds = bqr::threshold_labels(from_latent({2.0, 2.0, 2.0}), 1.0);
  Eigen::MatrixXd preds = Eigen::MatrixXd::Random(3, 3);
  EXPECT_THROW(bqr::normalize_for_coverage(ds, preds, bqr::TauGrid::uniform(3)),
               bqr::DegenerateDistribution);
}

}  // namespace
