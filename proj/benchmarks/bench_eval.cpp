#include <benchmark/benchmark.h>

#include "mccm/builder.hpp"
#include "mccm/composer.hpp"
#include "mccm/descriptors.hpp"
#include "mccm/dse.hpp"
#include "mccm/notation.hpp"

namespace {

using namespace mccm;

const CnnModel& xception() {
  static CnnModel cnn = load_cnn(std::filesystem::path(MCCM_BENCH_DATA_DIR) / "xception.json");
  return cnn;
}

const CnnModel& resnet50() {
  static CnnModel cnn = load_cnn(std::filesystem::path(MCCM_BENCH_DATA_DIR) / "resnet50.json");
  return cnn;
}

const FpgaPlatform& zcu102() {
  static FpgaPlatform p =
      load_platform(std::filesystem::path(MCCM_BENCH_DATA_DIR) / "zcu102.json");
  return p;
}

void BM_EvaluateSegmented(benchmark::State& state) {
  const int ce = static_cast<int>(state.range(0));
  for (auto _ : state) {
    AcceleratorSketch sketch = enumerate_family(Family::segmented, ce, xception());
    benchmark::DoNotOptimize(evaluate_sketch(sketch, Family::segmented, xception(), zcu102()));
  }
}
BENCHMARK(BM_EvaluateSegmented)->Arg(2)->Arg(6)->Arg(11);

void BM_EvaluateRoundRobin(benchmark::State& state) {
  const int ce = static_cast<int>(state.range(0));
  for (auto _ : state) {
    AcceleratorSketch sketch = enumerate_family(Family::segmented_rr, ce, xception());
    benchmark::DoNotOptimize(
        evaluate_sketch(sketch, Family::segmented_rr, xception(), zcu102()));
  }
}
BENCHMARK(BM_EvaluateRoundRobin)->Arg(2)->Arg(6)->Arg(11);

void BM_EvaluateHybrid(benchmark::State& state) {
  const int ce = static_cast<int>(state.range(0));
  for (auto _ : state) {
    AcceleratorSketch sketch = enumerate_family(Family::hybrid, ce, xception());
    benchmark::DoNotOptimize(evaluate_sketch(sketch, Family::hybrid, xception(), zcu102()));
  }
}
BENCHMARK(BM_EvaluateHybrid)->Arg(2)->Arg(6)->Arg(11);

void BM_BuildOnly(benchmark::State& state) {
  const AcceleratorSketch sketch = enumerate_family(Family::segmented, 4, xception());
  for (auto _ : state)
    benchmark::DoNotOptimize(build_accelerator(sketch, xception(), zcu102()));
}
BENCHMARK(BM_BuildOnly);

void BM_ComposeOnly(benchmark::State& state) {
  const AcceleratorSketch sketch = enumerate_family(Family::segmented, 4, xception());
  const Accelerator acc = build_accelerator(sketch, xception(), zcu102());
  for (auto _ : state) benchmark::DoNotOptimize(compose(acc));
}
BENCHMARK(BM_ComposeOnly);

void BM_ParseFormat(benchmark::State& state) {
  const std::string text =
      format_accelerator(enumerate_family(Family::hybrid, 11, resnet50()));
  for (auto _ : state)
    benchmark::DoNotOptimize(format_accelerator(parse_accelerator(text, resnet50())));
}
BENCHMARK(BM_ParseFormat);

void BM_SampleCustom(benchmark::State& state) {
  DesignSpaceConfig cfg;
  cfg.ce_lo = 2;
  cfg.ce_hi = 11;
  std::uint64_t index = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_custom_sketch(42, index++, cfg, resnet50()));
}
BENCHMARK(BM_SampleCustom);

}  // namespace

BENCHMARK_MAIN();
