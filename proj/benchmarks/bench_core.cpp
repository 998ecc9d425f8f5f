// Microbenchmarks for the hot paths: exact inference, ancestral sampling,
// rendering and its inverse, the plug-in measure, counterfactual emission,
// and one SGD epoch. Shared fixtures are built once per process.

#include <benchmark/benchmark.h>

#include <utility>
#include <vector>

#include "causalaug/augment.hpp"
#include "causalaug/datagen.hpp"
#include "causalaug/info.hpp"
#include "causalaug/mlp.hpp"
#include "causalaug/scm.hpp"

using namespace causalaug;

namespace {

const Scm& dcm_scm() {
  static const Scm scm = build_scm({Variant::DCM, 0.95, 1, 1, 0});
  return scm;
}

const Dataset& cm_train() {
  static const Dataset train =
      generate_dataset({Variant::CM, 0.95, 4096, 16, 1}).first;
  return train;
}

void bm_exact_joint(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(exact_joint(dcm_scm(), {"digit", "fg", "bg"}));
}
BENCHMARK(bm_exact_joint);

void bm_cnf_exact(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cnf_exact(dcm_scm(), "digit", "fg"));
}
BENCHMARK(bm_cnf_exact);

void bm_ancestral_sampling(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample(dcm_scm(), n, 7));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n));
}
BENCHMARK(bm_ancestral_sampling)->Arg(1024)->Arg(16384);

void bm_cnf_empirical(benchmark::State& state) {
  const auto samples = sample(dcm_scm(), static_cast<std::size_t>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(cnf_empirical(samples, "digit", "fg"));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(bm_cnf_empirical)->Arg(60000);

void bm_render(benchmark::State& state) {
  const FactorTuple z{7, 1, 3, 4, -1, -1, 0.9f};
  for (auto _ : state) benchmark::DoNotOptimize(render(z, Variant::CM));
}
BENCHMARK(bm_render);

void bm_invert(benchmark::State& state) {
  const Image img = render({7, 1, 3, 4, -1, -1, 0.9f}, Variant::CM);
  for (auto _ : state) benchmark::DoNotOptimize(invert(img, Variant::CM));
}
BENCHMARK(bm_invert);

void bm_counterfactual(benchmark::State& state) {
  const Instance& src = cm_train().instances.front();
  int digit = 0;
  for (auto _ : state) {
    digit = (digit + 1) % 10;
    benchmark::DoNotOptimize(counterfactual(src, Variant::CM, "digit", digit));
  }
}
BENCHMARK(bm_counterfactual);

void bm_filter_confounded(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(filter_confounded(cm_train(), 0.05));
}
BENCHMARK(bm_filter_confounded);

void bm_train_epoch(benchmark::State& state) {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(train(cm_train(), cfg));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(cm_train().instances.size()));
}
BENCHMARK(bm_train_epoch)->Unit(benchmark::kMillisecond);

void bm_predict(benchmark::State& state) {
  static const MlpModel model = MlpModel::glorot({kImageBytes, 256, 64, kClasses}, 5);
  const Image& img = cm_train().instances.front().image;
  for (auto _ : state) benchmark::DoNotOptimize(predict(model, img));
}
BENCHMARK(bm_predict);

}  // namespace

BENCHMARK_MAIN();
