// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "segreg/kernels.hpp"
#include "segreg/quantum_sampler.hpp"
#include "segreg/rng.hpp"

using namespace segreg;

namespace {

struct WaveFixture {
  WaveModel model{3, WaveModel::uniform_sensors(50), 1.0};
  DigitConfig cfg = DigitConfig::uniform(4, 8, 8, 3);
  LossSpec spec{model.eval(std::vector<double>{0.25, 0.5, 0.75}), std::nullopt, 0.0, {}};
  std::vector<int> strings;
  std::size_t count;

  explicit WaveFixture(std::size_t n) : count(n) {
    Rng rng(1);
    strings.resize(count * cfg.size());
    for (int& d : strings) d = static_cast<int>(rng() % 4);
  }
};

void BM_EvaluateDigits(benchmark::State& state) {
  WaveFixture f(static_cast<std::size_t>(state.range(0)));
  std::vector<kernels::Evaluation> out(f.count);
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    if (threads == 0) {
      kernels::evaluate_digits_serial(f.model, f.spec, f.cfg, f.strings, out);
    } else {
      kernels::evaluate_digits_parallel(f.model, f.spec, f.cfg, f.strings, out, threads);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SweepComponent(benchmark::State& state) {
  WaveFixture f(1);
  std::vector<double> values(static_cast<std::size_t>(state.range(0)));
  for (std::size_t g = 0; g < values.size(); ++g) values[g] = 0.3 + 0.4 * g / values.size();
  std::vector<double> errors(values.size());
  const std::vector<double> theta{0.25, 0.5, 0.75};
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    if (threads == 0) {
      kernels::sweep_component_serial(f.model, f.spec, theta, 1, values, errors);
    } else {
      kernels::sweep_component_parallel(f.model, f.spec, theta, 1, values, errors, threads);
    }
    benchmark::DoNotOptimize(errors.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MeasureMse(benchmark::State& state) {
  const auto cfg = DigitConfig::uniform(4, 2, 3, 1);
  const auto noise = NoiseModel::correlated(0.4, 0.15);
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        measure_mse(noise, cfg, 0, static_cast<std::uint64_t>(state.range(0)), 7, threads == 0 ? 1 : threads));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

// second argument: 0 = serial reference, otherwise OpenMP thread count
// (measure_mse with one thread takes the serial chunk loop)
BENCHMARK(BM_EvaluateDigits)->Args({816, 0})->Args({816, 1})->Args({816, 2})->Args({816, 4})->UseRealTime();
BENCHMARK(BM_SweepComponent)->Args({6000, 0})->Args({6000, 1})->Args({6000, 2})->Args({6000, 4})->UseRealTime();
BENCHMARK(BM_MeasureMse)->Args({1 << 20, 0})->Args({1 << 20, 2})->Args({1 << 20, 4})->UseRealTime();

BENCHMARK_MAIN();
