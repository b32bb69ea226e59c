#include <benchmark/benchmark.h>

#include "softclt/dataset.hpp"
#include "softclt/distance.hpp"
#include "softclt/eval.hpp"
#include "softclt/rng.hpp"

using namespace softclt;

namespace {

TimeSeriesSet corpus(std::size_t n_per_class, std::size_t length) {
  SyntheticSpec spec;
  spec.n_per_class = n_per_class;
  spec.length = length;
  spec.classes = default_families();
  spec.seed = 7;
  return make_synthetic(spec);
}

void BM_PairwiseDtwSerial(benchmark::State& state) {
  const auto set = corpus(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_raw_serial(set, Metric::Dtw));
}

void BM_PairwiseDtwParallel(benchmark::State& state) {
  const auto set = corpus(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_raw(set, Metric::Dtw));
}

void BM_AnomalySerial(benchmark::State& state) {
  SpikeSpec spec;
  spec.length = static_cast<std::size_t>(state.range(0));
  spec.spike_index = spec.length / 2;
  const auto s = make_spike_series(spec);
  EncoderConfig ec;
  const EncoderModel model(ec, 1);
  for (auto _ : state) benchmark::DoNotOptimize(anomaly_scores_serial(model, s.series));
}

void BM_AnomalyParallel(benchmark::State& state) {
  SpikeSpec spec;
  spec.length = static_cast<std::size_t>(state.range(0));
  spec.spike_index = spec.length / 2;
  const auto s = make_spike_series(spec);
  EncoderConfig ec;
  const EncoderModel model(ec, 1);
  for (auto _ : state) benchmark::DoNotOptimize(anomaly_scores(model, s.series));
}

void BM_KnnSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Tensor train(Shape{n, 16}), test(Shape{n, 16});
  Rng rng(3);
  for (auto& v : train.raw()) v = rng.uniform();
  for (auto& v : test.raw()) v = rng.uniform();
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 3);
  for (auto _ : state) benchmark::DoNotOptimize(knn_predict_serial(train, labels, test, 5));
}

void BM_KnnParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Tensor train(Shape{n, 16}), test(Shape{n, 16});
  Rng rng(3);
  for (auto& v : train.raw()) v = rng.uniform();
  for (auto& v : test.raw()) v = rng.uniform();
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 3);
  for (auto _ : state) benchmark::DoNotOptimize(knn_predict(train, labels, test, 5));
}

}  // namespace

BENCHMARK(BM_PairwiseDtwSerial)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseDtwParallel)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnomalySerial)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnomalyParallel)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnSerial)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnParallel)->Arg(500)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
