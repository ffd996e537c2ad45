// Throughput of the hot paths: batched forward/backward, one training epoch,
// and quantile smoothing with its Simpson integrals.
#include <benchmark/benchmark.h>

#include "bqr/data.hpp"
#include "bqr/loss.hpp"
#include "bqr/net.hpp"
#include "bqr/optim.hpp"
#include "bqr/quantiles.hpp"

namespace {

using namespace bqr;

QuantileNet make_net(int width) {
  return init_net(1, {static_cast<std::size_t>(width), static_cast<std::size_t>(width)},
                  TauGrid::uniform(9), 5);
}

void BM_Forward(benchmark::State& state) {
  const QuantileNet net = make_net(static_cast<int>(state.range(0)));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(state.range(1), 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(net, x));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Forward)->Args({64, 128})->Args({64, 1024})->Args({256, 1024});

void BM_Backward(benchmark::State& state) {
  const QuantileNet net = make_net(static_cast<int>(state.range(0)));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(state.range(1), 1);
  std::vector<int> y(static_cast<std::size_t>(state.range(1)));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  const LossSpec spec{TauGrid::uniform(9), 1.0, LossKind::kBqr};
  for (auto _ : state) benchmark::DoNotOptimize(backward(net, x, y, spec));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Backward)->Args({64, 128})->Args({64, 1024})->Args({256, 1024});

void BM_TrainEpoch(benchmark::State& state) {
  LabeledDataset ds = gen_dataset(DatasetId::kD1, 5000, 11);
  ds = threshold_labels(std::move(ds), latent_quantile(ds, 0.5));
  const LossSpec spec{TauGrid::uniform(9), 1.0, LossKind::kBqr};
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 128;
  cfg.lr = LipschitzAdaptiveRate{};
  for (auto _ : state) benchmark::DoNotOptimize(train(make_net(64), ds, spec, cfg));
  state.SetItemsProcessed(state.iterations() * 5000);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_SmoothMean(benchmark::State& state) {
  const TauGrid grid = TauGrid::uniform(9);
  std::vector<double> v;
  for (std::size_t i = 0; i < grid.size(); ++i) v.push_back(static_cast<double>(i) - 4.0);
  const LatentPrediction pred(v);
  for (auto _ : state) benchmark::DoNotOptimize(conditional_mean(smooth(pred, grid)));
}
BENCHMARK(BM_SmoothMean);

void BM_SmoothVariance(benchmark::State& state) {
  const TauGrid grid = TauGrid::uniform(9);
  std::vector<double> v;
  for (std::size_t i = 0; i < grid.size(); ++i) v.push_back(static_cast<double>(i) - 4.0);
  const auto sq = smooth(LatentPrediction(v), grid);
  for (auto _ : state) benchmark::DoNotOptimize(conditional_stat(sq, Variance{}));
}
BENCHMARK(BM_SmoothVariance);

}  // namespace

BENCHMARK_MAIN();
