#include <doctest.h>

#include <cmath>

#include "segreg/error.hpp"
#include "segreg/refinement.hpp"

using namespace segreg;

namespace {

std::shared_ptr<FunctionModel> identity_model(std::size_t dim) {
  return std::make_shared<FunctionModel>("identity", dim, dim,
                                         [](std::span<const double> t, std::span<double> out) {
                                           std::copy(t.begin(), t.end(), out.begin());
                                         });
}

}  // namespace

TEST_CASE("grid points") {
  const auto g = grid_points(0.5, GridSpec{6000, 0.2});
  REQUIRE(g.size() == 6000);
  CHECK(g.front() == 0.5 - 0.2);
  CHECK(g.back() == 0.5 + 0.2);
  CHECK(g[1] - g[0] == doctest::Approx(0.4 / 5999));
  CHECK(0.4 / 5999 == doctest::Approx(6.668e-5).epsilon(1e-3));
  for (std::size_t j = 1; j < g.size(); ++j) CHECK(g[j] > g[j - 1]);

  const auto odd = grid_points(0.25, GridSpec{301, 0.2});
  CHECK(odd[150] == 0.25);
  CHECK(grid_points(1.7, GridSpec{1, 0.2}) == std::vector<double>{1.7});
  CHECK_THROWS_AS(grid_points(0.0, GridSpec{0, 0.2}), ContractError);
  CHECK_THROWS_AS(grid_points(0.0, GridSpec{3, 0.0}), ContractError);
  CHECK_THROWS_AS(grid_points(NAN, GridSpec{3, 0.1}), DomainError);
}

TEST_CASE("a single grid point is the identity") {
  const auto id = identity_model(2);
  LossSpec spec{{0.3, -0.1}, std::nullopt, 0.0, {}};
  const std::vector<double> theta{0.25, 0.0};
  const double e0 = error_at(spec, *id, theta);
  const auto r = multiscale_refine(*id, spec, theta, e0, GridSpec{1, 0.2});
  CHECK(r.theta == theta);
  CHECK(r.error == e0);
  CHECK(r.calls == 2);
  for (const auto& s : r.steps) CHECK(s.index == -1);
  const auto f = fine_tune(*id, spec, theta, e0, GridSpec{1, 0.2});
  CHECK(f.theta == theta);
  CHECK(f.diagnostic_calls == 0);
}

TEST_CASE("multiscale sweep lands within half a grid step") {
  const auto id = identity_model(1);
  LossSpec spec{{0.3}, std::nullopt, 0.0, {}};
  const std::vector<double> theta{0.25};
  const auto r = multiscale_refine(*id, spec, theta, error_at(spec, *id, theta), GridSpec{301, 0.2});
  const double h = 0.4 / 300;
  CHECK(std::abs(r.theta[0] - 0.3) <= 0.5 * h + 1e-15);
  CHECK(r.error == doctest::Approx((r.theta[0] - 0.3) * (r.theta[0] - 0.3)));
  CHECK(r.calls == 301);
  CHECK(r.steps.size() == 1);
  CHECK(r.steps[0].index >= 0);
}

TEST_CASE("multiscale keeps the incumbent unless strictly improved") {
  const auto id = identity_model(1);
  LossSpec spec{{0.25}, std::nullopt, 0.0, {}};
  const std::vector<double> theta{0.25};
  const auto r = multiscale_refine(*id, spec, theta, 0.0, GridSpec{301, 0.2});
  CHECK(r.theta[0] == 0.25);
  CHECK(r.steps[0].index == -1);
  CHECK(r.error == 0.0);
}

TEST_CASE("multiscale propagates between components") {
  // x = A theta with a coupling: the second sweep must see the first update
  const LinearModel m(Matrix::from_rows({{1.0, 0.0}, {1.0, 1.0}}));
  LossSpec spec{m.eval(std::vector<double>{0.1, 0.1}), std::nullopt, 0.0, {}};
  const std::vector<double> theta{0.0, 0.0};
  const auto r = multiscale_refine(m, spec, theta, error_at(spec, m, theta), GridSpec{401, 0.2});
  // t0 alone settles at 0.15; t1 then answers 0.05 (it would pick 0.2 against t0 = 0)
  CHECK(r.steps[0].error >= r.steps[1].error);
  CHECK(r.theta[0] == doctest::Approx(0.15));
  CHECK(r.theta[1] == doctest::Approx(0.05));
  CHECK(r.error == doctest::Approx(0.0025));
}

TEST_CASE("fine tune resolution and window") {
  const auto id = identity_model(3);
  const std::vector<double> truth{0.2512345, 0.4987654, 0.75};
  LossSpec spec{truth, std::nullopt, 0.0, {}};
  const std::vector<double> theta{0.25, 0.5, 0.75};
  const auto r = fine_tune(*id, spec, theta, error_at(spec, *id, theta), GridSpec{6000, 0.2});
  for (int k = 0; k < 3; ++k) CHECK(std::abs(r.theta[k] - truth[k]) <= 0.5 * 0.4 / 5999 + 1e-15);
  CHECK(r.theta[2] == 0.75);  // already exact: incumbent stays
  CHECK(r.calls == 18000);
  CHECK(r.diagnostic_calls == 1);
  CHECK(r.error == doctest::Approx(error_at(spec, *id, r.theta)));

  // truth outside the window: pinned to the nearest endpoint
  LossSpec far{{1.0}, std::nullopt, 0.0, {}};
  const auto one = identity_model(1);
  const std::vector<double> t0{0.25};
  const auto p = fine_tune(*one, far, t0, error_at(far, *one, t0), GridSpec{6000, 0.2});
  CHECK(p.theta[0] == 0.25 + 0.2);
}

TEST_CASE("fine tune reverts a joint move that is worse") {
  // E = (t0 + t1 + t2 - 1)^2: each coordinate alone closes the whole gap,
  // together they overshoot by twice the gap
  const FunctionModel sum("sum", 3, 1, [](std::span<const double> t, std::span<double> out) {
    out[0] = t[0] + t[1] + t[2];
  });
  LossSpec spec{{1.0}, std::nullopt, 0.0, {}};
  const std::vector<double> theta{0.3, 0.3, 0.3};
  const double e0 = error_at(spec, sum, theta);
  const auto r = fine_tune(sum, spec, theta, e0, GridSpec{401, 0.2});
  for (const auto& s : r.steps) CHECK(s.index >= 0);
  CHECK(r.theta == theta);
  CHECK(r.error == e0);
  CHECK(r.diagnostic_calls == 1);
  CHECK(r.calls == 3 * 401);
}

TEST_CASE("entropy hook") {
  const auto cfg = make_config(DigitConfig::uniform(4, 0, 1, 1));
  const DigitVector truth(cfg, {1, 2});
  const auto born = synthetic_born(truth, 0.25);  // uniform registers
  const auto empirical = sample_all(born, 40, 5);
  const auto hot = entropy_refine_hook(born, empirical, CandidatePolicy::top(2), 0.5, 9);
  CHECK(hot.flagged == std::vector<bool>{true, true});
  CHECK(hot.resampled_shots == 160);
  for (const auto& e : hot.empirical) CHECK(e.shots == 80);
  CHECK(hot.candidates.size() == 2);
  CHECK(hot.candidates[0].size() == 2);

  const auto sure = point_mass_born(truth);
  const auto cold = entropy_refine_hook(sure, sample_all(sure, 40, 5), CandidatePolicy::top(2), 0.5, 9);
  CHECK(cold.flagged == std::vector<bool>{false, false});
  CHECK(cold.resampled_shots == 0);
  CHECK(cold.entropy == std::vector<double>{0.0, 0.0});
  CHECK(cold.candidates == CandidateSets{{1}, {2}});

  // determinism
  const auto again = entropy_refine_hook(born, empirical, CandidatePolicy::top(2), 0.5, 9);
  CHECK(again.candidates == hot.candidates);
  CHECK_THROWS_AS(entropy_refine_hook(born, EmpiricalTable{}, CandidatePolicy::full(), 0.5, 1),
                  ContractError);
}
