// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>

#include <random>

#include "deltaforge/boundary.hpp"
#include "deltaforge/models.hpp"
#include "support.hpp"

using namespace deltaforge;

namespace {

struct Classified {
  testsupport::SyntheticDelta delta = testsupport::make_delta(256, 1);
  Model model;
  Classified() {
    std::mt19937_64 rng(1);
    LabelSet labels(raster_digest(delta.raster));
    for (const auto& s : testsupport::sample_labels(delta.truth, 30, rng)) labels.set(s.row, s.col, s.class_id);
    model = train_svm(build_training_set(delta.raster, labels));
  }
};

const Classified& classified() {
  static const Classified c;
  return c;
}

const ComponentLabeling& labeling() {
  static const ComponentLabeling l = [] {
    std::mt19937_64 rng(3);
    return label_components(testsupport::random_blobs(512, 512, 4, 0.8, rng));
  }();
  return l;
}

void BM_PredictMapSerial(benchmark::State& state) {
  const auto& c = classified();
  for (auto _ : state) benchmark::DoNotOptimize(predict_map_serial(c.model, c.delta.raster));
}

void BM_PredictMap(benchmark::State& state) {
  const auto& c = classified();
  for (auto _ : state) benchmark::DoNotOptimize(predict_map(c.model, c.delta.raster, static_cast<int>(state.range(0))));
}

void BM_PolygonizeSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(polygonize_serial(labeling()));
}

void BM_Polygonize(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(polygonize(labeling(), static_cast<int>(state.range(0))));
}

}  // namespace

BENCHMARK(BM_PredictMapSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictMap)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PolygonizeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Polygonize)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
