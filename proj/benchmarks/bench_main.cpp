#include <benchmark/benchmark.h>

#include <vector>

#include "acrst/config.hpp"
#include "acrst/cropbank.hpp"
#include "acrst/logging.hpp"
#include "acrst/metrics.hpp"
#include "acrst/rebalance.hpp"
#include "acrst/simloop.hpp"

using namespace acrst;

namespace {

BBox random_box(Rng& rng, double extent) {
  const double x = uniform(rng, 0.0, extent * 0.8);
  const double y = uniform(rng, 0.0, extent * 0.8);
  return BBox{x, y, uniform(rng, 1.0, extent - x), uniform(rng, 1.0, extent - y)};
}

void BM_VisibleFraction(benchmark::State& state) {
  Rng rng{1};
  const BBox inst = random_box(rng, 100.0);
  std::vector<BBox> occluders;
  for (int i = 0; i < state.range(0); ++i) occluders.push_back(random_box(rng, 100.0));
  for (auto _ : state) benchmark::DoNotOptimize(visible_fraction(inst, occluders));
}
BENCHMARK(BM_VisibleFraction)->Arg(1)->Arg(4)->Arg(16)->Arg(64);

void BM_SampleCrops(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.dataset.synthetic.num_images = 500;
  const Dataset ds = load_dataset(cfg);
  const CropBank bank = build_labeled_bank(ds);
  const auto mu = SamplingDistribution::uniform(ds.num_classes());
  Rng rng{2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_crops(bank, mu, static_cast<std::size_t>(state.range(0)), rng));
  }
}
BENCHMARK(BM_SampleCrops)->Arg(2)->Arg(64);

void BM_MatchGreedy(benchmark::State& state) {
  Rng rng{3};
  std::vector<Prediction> preds;
  std::vector<Instance> gts;
  for (int i = 0; i < state.range(0); ++i) {
    const BBox b = random_box(rng, 640.0);
    gts.push_back({1 + i % 5, b, 1});
    preds.push_back({1 + i % 5, BBox{b.x + 2, b.y + 1, b.w, b.h}, uniform(rng)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(match_greedy(preds, gts, 0.5, true));
}
BENCHMARK(BM_MatchGreedy)->Arg(8)->Arg(64)->Arg(256);

void BM_RunEpoch(benchmark::State& state) {
  set_log_sink(nullptr);
  ExperimentConfig cfg;
  cfg.detector.ema_alpha = 0.9;
  const Dataset ds = load_dataset(cfg);
  for (auto _ : state) {
    state.PauseTiming();
    LoopState st = init_loop(cfg, ds);
    state.ResumeTiming();
    benchmark::DoNotOptimize(run_epoch(st, cfg));
  }
}
BENCHMARK(BM_RunEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
