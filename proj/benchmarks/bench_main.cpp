#include <benchmark/benchmark.h>

#include "trollkit/experiment.hpp"
#include "trollkit/learner.hpp"
#include "trollkit/mitigation.hpp"
#include "trollkit/noise.hpp"

using namespace trollkit;

namespace {

const BenchmarkInstance& troll_instance() {
  static const BenchmarkInstance inst = [] {
    ExperimentConfig cfg;
    return make_instance(cfg, preset_population(Preset::Troll, 1), 1);
  }();
  return inst;
}

void BM_Featurize(benchmark::State& state) {
  const auto& inst = troll_instance();
  const FeaturizerConfig feat;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(featurize(inst.train[i % inst.train.size()].text, feat));
    ++i;
  }
}
BENCHMARK(BM_Featurize);

void BM_Train(benchmark::State& state) {
  const auto& inst = troll_instance();
  const ExperimentConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(train(inst.train, inst.valid, cfg.feat, cfg.train));
}
BENCHMARK(BM_Train)->Unit(benchmark::kMillisecond);

void BM_OofPredict(benchmark::State& state) {
  const auto& inst = troll_instance();
  const ExperimentConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(oof_predict(inst.train, inst.valid, cfg.k, cfg.feat, cfg.train));
}
BENCHMARK(BM_OofPredict)->Unit(benchmark::kMillisecond);

void BM_Trial(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.record_wall_time = false;
  cfg.presets = {"troll"};
  cfg.algorithms = {all_algorithms().at(static_cast<std::size_t>(state.range(0)))};
  cfg.seeds = {1};
  const auto trials = expand_trials(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(run_trials(trials, cfg));
  state.SetLabel(std::string(to_string(cfg.algorithms.front())));
}
BENCHMARK(BM_Trial)->DenseRange(0, static_cast<int>(all_algorithms().size()) - 1)
    ->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
