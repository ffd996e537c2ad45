#include <sstream>

#include <gtest/gtest.h>

#include "bqr/error.hpp"
#include "bqr/experiment.hpp"

namespace {

bqr::TrainConfig quick(int epochs) {
  bqr::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 32;
  cfg.lr = bqr::LipschitzAdaptiveRate{};
  cfg.seed = 1;
  return cfg;
}

bqr::ModelConfig small_model() {
  bqr::ModelConfig m;
  m.trunk_widths = {16};
  m.init_seed = 3;
  return m;
}

TEST(TwoBlobs, ShapeAndBalance) {
  const auto ds = bqr::two_blobs(400, 3, 1.0, 0.3, 5);
  EXPECT_EQ(ds.rows(), 400u);
  EXPECT_EQ(ds.dims(), 3u);
  EXPECT_LE(ds.features.cwiseAbs().maxCoeff(), 1.0);
  int ones = 0;
  for (int y : ds.labels) ones += y;
  EXPECT_NEAR(ones, 200, 40);
}

TEST(ModelConfig, BceBaseline) {
  const auto b = small_model().bce_baseline();
  EXPECT_EQ(b.kind, bqr::LossKind::kBce);
  EXPECT_EQ(b.grid.size(), 1u);
  EXPECT_NO_THROW(b.loss_spec().validate());
}

TEST(Evaluate, SimulatedRunReportsEverything) {
  auto ds = bqr::gen_dataset(bqr::DatasetId::kD1, 600, 2);
  ds = bqr::threshold_labels(ds, bqr::latent_quantile(ds, 0.5));
  const auto split = bqr::split_fraction(ds, 0.7, 1);
  const auto fit = bqr::fit(split.train, small_model(), quick(20));
  EXPECT_EQ(fit.trace.epochs.size(), 20u);
  const auto ev = bqr::evaluate(fit.checkpoint, split.test);
  EXPECT_EQ(ev.preds.rows(), static_cast<Eigen::Index>(split.test.rows()));
  EXPECT_EQ(ev.preds.cols(), 9);
  EXPECT_TRUE(ev.coverage.has_value());
  EXPECT_TRUE(ev.pi50_coverage.has_value());
  EXPECT_TRUE(ev.median_latent_correlation.has_value());
  EXPECT_GT(ev.accuracy, 0.6);
  const auto js = bqr::evaluation_summary(ev);
  EXPECT_TRUE(js.contains("accuracy"));
}

TEST(Evaluate, WithoutLatentSkipsCoverage) {
  const auto ds = bqr::two_blobs(200, 2, 1.0, 0.3, 5);
  const auto fit = bqr::fit(ds, small_model(), quick(3));
  const auto ev = bqr::evaluate(fit.checkpoint, ds);
  EXPECT_FALSE(ev.coverage.has_value());
  EXPECT_FALSE(ev.notes.empty());
  EXPECT_EQ(ev.delta.thresholds.size(), 5u);
}

TEST(Evaluate, BceCheckpointGetsAccuracyOnly) {
  const auto ds = bqr::two_blobs(200, 2, 1.0, 0.3, 5);
  const auto fit = bqr::fit(ds, small_model().bce_baseline(), quick(3));
  const auto ev = bqr::evaluate(fit.checkpoint, ds);
  EXPECT_TRUE(ev.auc.has_value());
  EXPECT_FALSE(ev.coverage.has_value());
  EXPECT_TRUE(ev.reports.empty());
}

TEST(NoiseSweep, TableShape) {
  const auto ds = bqr::two_blobs(300, 2, 1.0, 0.3, 5);
  std::vector<double> fr{0.0, 0.2};
  const auto rows = bqr::noise_sweep(ds, ds, fr, small_model(), quick(2), 9);
  ASSERT_EQ(rows.size(), 2u);
  std::ostringstream os;
  bqr::write_noise_sweep_csv(os, "blobs", rows);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "dataset,loss,0%,20%");
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 2);
  std::vector<double> bad{0.7};
  EXPECT_THROW(bqr::noise_sweep(ds, ds, bad, small_model(), quick(2), 9), bqr::DomainError);
}

TEST(LalrBench, ReportsThreeArms) {
  const auto ds = bqr::two_blobs(200, 2, 1.0, 0.2, 5);
  bqr::ModelConfig m = small_model();
  m.grid = bqr::TauGrid({0.5});
  const auto res = bqr::lalr_bench(ds, m, quick(5), 0.9);
  std::ostringstream os;
  bqr::write_lalr_bench_csv(os, "blobs", res);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "dataset,accuracy,N_0.01,N_0.1,N_1/L");
}

TEST(Pearson, Basics) {
  std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1};
  EXPECT_NEAR(bqr::pearson_correlation(a, b), 1.0, 1e-15);
  EXPECT_NEAR(bqr::pearson_correlation(a, c), -1.0, 1e-15);
}

}  // namespace
