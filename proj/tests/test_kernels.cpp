#include <doctest.h>

#include <stdexcept>

#include "segreg/error.hpp"
#include "segreg/kernels.hpp"
#include "segreg/rng.hpp"

using namespace segreg;

TEST_CASE("parallel digit evaluation is bitwise equal to serial") {
  const WaveModel model(3, WaveModel::uniform_sensors(50), 1.0);
  const auto cfg = DigitConfig::uniform(4, 2, 3, 3);
  LossSpec spec{model.eval(std::vector<double>{0.25, 0.5, 0.75}), std::nullopt, 0.5,
                LossSpec::geometric_omega(cfg, 0.01)};
  model.reset_calls();
  Rng rng(1);
  const std::size_t count = 257;
  std::vector<int> strings(count * cfg.size());
  for (std::size_t t = 0; t < strings.size(); ++t) strings[t] = static_cast<int>(rng() % 4);

  std::vector<kernels::Evaluation> serial(count), parallel(count);
  kernels::evaluate_digits_serial(model, spec, cfg, strings, serial);
  for (int threads : {1, 2, 3, 8}) {
    kernels::evaluate_digits_parallel(model, spec, cfg, strings, parallel, threads);
    for (std::size_t c = 0; c < count; ++c) {
      CHECK(parallel[c].loss == serial[c].loss);
      CHECK(parallel[c].error == serial[c].error);
    }
  }
  CHECK(model.calls() == count * 5);
  // evaluations agree with the scalar loss path
  const auto cfgp = make_config(cfg);
  std::vector<int> first(strings.begin(), strings.begin() + static_cast<std::ptrdiff_t>(cfg.size()));
  CHECK(serial[0].loss == loss(spec, model, DigitVector(cfgp, first)));
}

TEST_CASE("parallel component sweep is bitwise equal to serial") {
  const WaveModel model(3, WaveModel::uniform_sensors(50), 1.0);
  LossSpec spec{model.eval(std::vector<double>{0.25, 0.5, 0.75}), std::nullopt, 0.0, {}};
  const std::vector<double> theta{0.2, 0.55, 0.8};
  std::vector<double> values(1001);
  for (std::size_t g = 0; g < values.size(); ++g) values[g] = 0.3 + 0.0004 * g;
  std::vector<double> a(values.size()), b(values.size());
  kernels::sweep_component_serial(model, spec, theta, 1, values, a);
  kernels::sweep_component_parallel(model, spec, theta, 1, values, b, 4);
  CHECK(a == b);
  kernels::sweep_component(model, spec, theta, 1, values, b, 1);
  CHECK(a == b);
}

TEST_CASE("chunked accumulation does not depend on thread count") {
  const kernels::ChunkFn fn = [](std::uint64_t c, std::uint64_t size) {
    Rng rng(derive_seed(42, c));
    kernels::Moments m;
    for (std::uint64_t t = 0; t < size; ++t) {
      const double u = uniform01(rng);
      m.sum += u;
      m.sum_sq += u * u;
    }
    m.count = size;
    return m;
  };
  const auto s = kernels::accumulate_chunks_serial(100003, 1000, fn);
  for (int threads : {2, 5}) {
    const auto p = kernels::accumulate_chunks_parallel(100003, 1000, fn, threads);
    CHECK(p.sum == s.sum);
    CHECK(p.sum_sq == s.sum_sq);
    CHECK(p.count == 100003);
  }
}

TEST_CASE("exceptions inside parallel regions reach the caller") {
  const FunctionModel bad("bad", 1, 1, [](std::span<const double> t, std::span<double> out) {
    if (t[0] > 2.0) throw ModelError("boom");
    out[0] = t[0];
  });
  LossSpec spec{{0.0}, std::nullopt, 0.0, {}};
  std::vector<double> values{0.0, 1.0, 3.0, 4.0};
  std::vector<double> errors(values.size());
  CHECK_THROWS_AS(kernels::sweep_component_parallel(bad, spec, std::vector<double>{0.0}, 0, values,
                                                    errors, 3),
                  ModelError);
  const kernels::ChunkFn fn = [](std::uint64_t c, std::uint64_t) -> kernels::Moments {
    if (c == 3) throw std::runtime_error("chunk");
    return {};
  };
  CHECK_THROWS_AS(kernels::accumulate_chunks_parallel(10, 1, fn, 4), std::runtime_error);
}
