#include <doctest.h>

#include <cmath>
#include <numbers>

#include "segreg/error.hpp"
#include "segreg/forward_models.hpp"
#include "segreg/rng.hpp"

using namespace segreg;

namespace {

std::shared_ptr<FunctionModel> identity_model(std::size_t dim) {
  return std::make_shared<FunctionModel>("identity", dim, dim,
                                         [](std::span<const double> t, std::span<double> out) {
                                           std::copy(t.begin(), t.end(), out.begin());
                                         });
}

}  // namespace

TEST_CASE("wave model closed form") {
  const WaveModel w(1, {0.5}, 1.0, 1.0);
  CHECK(w.eval(std::vector<double>{1.0, })[0] == doctest::Approx(-1.0).epsilon(1e-15));

  const WaveModel grid(3, WaveModel::uniform_sensors(50), 1.0);
  const auto z = grid.eval(std::vector<double>{0.3, -1.2, 2.0});
  CHECK(z.front() == 0.0);
  CHECK(z.back() == 0.0);
  CHECK(grid.sensors().front() == 0.0);
  CHECK(grid.sensors().back() == 1.0);

  // T = 0 reproduces the initial displacement
  const WaveModel t0(3, WaveModel::uniform_sensors(11), 0.0);
  const std::vector<double> theta{0.25, 0.5, 0.75};
  const auto u = t0.eval(theta);
  for (std::size_t l = 0; l < u.size(); ++l) {
    double ref = 0.0;
    for (int k = 1; k <= 3; ++k) ref += theta[k - 1] * std::sin(k * std::numbers::pi * (l / 10.0));
    CHECK(u[l] == doctest::Approx(ref).epsilon(1e-13));
    CHECK(WaveModel::initial_displacement(theta, l / 10.0) == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("wave model is linear") {
  const WaveModel w(4, WaveModel::uniform_sensors(20), 0.37, 1.3);
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(4), b(4), mix(4);
    const double s = 4.0 * uniform01(rng) - 2.0;
    for (int k = 0; k < 4; ++k) {
      a[k] = uniform01(rng) - 0.5;
      b[k] = uniform01(rng) - 0.5;
      mix[k] = s * a[k] + b[k];
    }
    const auto za = w.eval(a);
    const auto zb = w.eval(b);
    const auto zm = w.eval(mix);
    for (std::size_t l = 0; l < zm.size(); ++l) CHECK(std::abs(zm[l] - (s * za[l] + zb[l])) < 1e-12);
  }
}

TEST_CASE("weighted error and call counting") {
  const auto id = identity_model(2);
  const auto cfg = make_config(DigitConfig::uniform(2, 0, 0, 2));
  LossSpec spec{{0.0, 0.0}, std::nullopt, 0.0, {}};
  CHECK(error(spec, *id, DigitVector(cfg, {1, 0})) == 1.0);
  spec.weight = Matrix::diagonal(std::vector<double>{4.0, 1.0});
  CHECK(error(spec, *id, DigitVector(cfg, {1, 0})) == 4.0);
  CHECK(id->calls() == 2);
  for (int t = 0; t < 10; ++t) error(spec, *id, DigitVector(cfg));
  CHECK(id->calls() == 12);
  CHECK(weighted_error(spec, std::vector<double>{1.0, 1.0}) == 5.0);
  CHECK(id->calls() == 12);

  LossSpec perfect{id->eval(std::vector<double>{1.0, 1.0}), std::nullopt, 0.0, {}};
  CHECK(error(perfect, *id, DigitVector(cfg, {1, 1})) == 0.0);
}

TEST_CASE("error with identity weight equals the squared residual norm") {
  const LinearModel m(Matrix::from_rows({{1.0, 2.0}, {-1.0, 0.5}, {3.0, 0.0}}));
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> theta{uniform01(rng), uniform01(rng)};
    std::vector<double> x{uniform01(rng), uniform01(rng), uniform01(rng)};
    LossSpec spec{x, std::nullopt, 0.0, {}};
    const auto z = m.eval(theta);
    double ref = 0.0;
    for (int l = 0; l < 3; ++l) ref += (z[l] - x[l]) * (z[l] - x[l]);
    CHECK(error_at(spec, m, theta) == doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("dimension mismatches are contract errors") {
  const auto id = identity_model(2);
  LossSpec spec{{0.0, 0.0, 0.0}, std::nullopt, 0.0, {}};
  CHECK_THROWS_AS(error_at(spec, *id, std::vector<double>{0.0, 0.0}), ContractError);
  CHECK_THROWS_AS(id->eval(std::vector<double>{0.0}), ContractError);
}

TEST_CASE("loss adds the weighted l1 digit penalty") {
  const auto id = identity_model(1);
  const auto cfg = make_config(DigitConfig::uniform(2, 1, 1, 1));
  const DigitVector y(cfg, {1, 0, 1});
  LossSpec spec{{2.5}, std::nullopt, 0.0, {}};
  CHECK(loss(spec, *id, y) == error(spec, *id, y));
  spec.lambda = 1.0;
  spec.omega = {1.0, 1.0, 1.0};
  CHECK(loss(spec, *id, y) == 2.0);
  CHECK(loss(spec, *id, DigitVector(cfg)) == error(spec, *id, DigitVector(cfg)));

  const auto omega = LossSpec::geometric_omega(*cfg, 2.0);
  CHECK(omega == std::vector<double>{1.0, 2.0, 4.0});
}

TEST_CASE("loss spec validation") {
  LossSpec spec{{0.0, 0.0}, std::nullopt, 0.0, {}};
  CHECK_NOTHROW(spec.validate(2));
  spec.lambda = -1.0;
  CHECK_THROWS_AS(spec.validate(2), ContractError);
  spec.lambda = 0.0;
  spec.weight = Matrix::from_rows({{1.0, 2.0}, {0.0, 1.0}});
  CHECK_THROWS_AS(spec.validate(2), ContractError);  // asymmetric
  spec.weight = Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}});
  CHECK_THROWS_AS(spec.validate(2), ContractError);  // indefinite
  spec.weight = Matrix::from_rows({{1.0, 1.0}, {1.0, 1.0}});
  CHECK_NOTHROW(spec.validate(2));                   // semi-definite
  spec.weight = Matrix::identity(3);
  CHECK_THROWS_AS(spec.validate(2), ContractError);
}

TEST_CASE("digit sensitivity") {
  const auto cfg = make_config(DigitConfig::uniform(2, 1, 1, 1));
  const auto id = identity_model(1);
  const auto sens = digit_sensitivity(*id, DigitVector(cfg, {1, 0, 1}));
  CHECK(sens.at({0, 0}) == 1.0);
  CHECK(sens.at({0, 1}) == doctest::Approx(2.0));   // 2^2 / 2
  CHECK(sens.at({0, -1}) == doctest::Approx(0.5));  // 0.25 / 0.5

  const FunctionModel constant("const", 1, 2, [](std::span<const double>, std::span<double> out) {
    out[0] = 3.0;
    out[1] = -1.0;
  });
  for (const auto& [key, v] : digit_sensitivity(constant, DigitVector(cfg, {0, 1, 0}))) CHECK(v == 0.0);

  const LinearModel lin(Matrix::from_rows({{2.0}, {-1.0}}));
  CHECK(digit_sensitivity(lin, DigitVector(cfg)) == digit_sensitivity(lin, DigitVector(cfg, {1, 1, 0})));
}

TEST_CASE("linear model lipschitz bound dominates the spectral norm") {
  const Matrix a = Matrix::from_rows({{3.0, 1.0}, {0.0, 2.0}, {1.0, -1.0}});
  const LinearModel m(a);
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v{uniform01(rng) - 0.5, uniform01(rng) - 0.5};
    const auto z = m.eval(v);
    double nz = 0.0;
    for (double q : z) nz += q * q;
    CHECK(std::sqrt(nz) <= *m.lipschitz_bound() * std::hypot(v[0], v[1]) + 1e-12);
  }
}

TEST_CASE("deceptive landscape") {
  CHECK(deceptive_error(3.0) == 0.0);
  CHECK(deceptive_error(7.0) == 0.2);
  CHECK(deceptive_error(4.0) == 0.5);
  CHECK(deceptive_error(3.5) == doctest::Approx(0.25));
  const auto model = make_deceptive_model();
  CHECK(model->eval(std::vector<double>{5.0})[0] == doctest::Approx(std::sqrt(0.4)));
  const auto cfg = deceptive_config();
  CHECK(cfg.depth() == 2);
  CHECK(range(cfg, 0).hi == 15.0);
}
