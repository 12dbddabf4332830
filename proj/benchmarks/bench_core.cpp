#include <benchmark/benchmark.h>

#include "rebalance/cwgan_gp.hpp"
#include "rebalance/dataset.hpp"
#include "rebalance/neighbors.hpp"
#include "rebalance/nnet.hpp"
#include "rebalance/smote.hpp"

namespace {

using namespace rebalance;

void BM_KnnQuery(benchmark::State& state) {
  const Dataset d = make_synthetic_imbalanced(900, 100, 8, 3.0, 7);
  const NeighborQuery q{5, 2.0};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(knn_query(d.features, d.features.row(i % d.rows()), q, i % d.rows()));
    ++i;
  }
}
BENCHMARK(BM_KnnQuery);

void BM_Smote(benchmark::State& state) {
  const Dataset d = make_synthetic_imbalanced(900, 100, 8, 3.0, 7);
  SmoteParams params;
  params.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(smote(d, params));
}
BENCHMARK(BM_Smote);

void BM_MlpForwardBackward(benchmark::State& state) {
  MlpSpec spec;
  spec.layer_widths = {10, 128, 64, 32, 1};
  spec.activation = Activation::Relu;
  spec.seed = 3;
  const MlpState net = init_mlp(spec);
  Matrix batch(64, 10);
  Rng rng(5);
  for (double& v : batch.data()) v = rng.uniform();
  const Matrix ones(64, 1, 1.0);
  for (auto _ : state) {
    ForwardCache cache;
    forward(net, spec, batch, &cache);
    benchmark::DoNotOptimize(backward(net, spec, cache, ones));
  }
}
BENCHMARK(BM_MlpForwardBackward);

void BM_GanEpoch(benchmark::State& state) {
  const Dataset d = make_synthetic_imbalanced(512, 64, 8, 3.0, 7);
  const MinMaxScaler scaler = fit_minmax(d);
  const Dataset scaled = apply_scaler(scaler, d, ScaleDirection::Forward);
  GanHyperParams hp;
  hp.epochs = 5;
  hp.batch_size = 64;
  for (auto _ : state) benchmark::DoNotOptimize(train_cwgan_gp(scaled, hp, {}, 11));
}
BENCHMARK(BM_GanEpoch)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
