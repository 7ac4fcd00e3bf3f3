#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "segreg/error.hpp"
#include "segreg/quantum_sampler.hpp"

using namespace segreg;

TEST_CASE("sampling a point mass always returns that digit") {
  const RegisterDistribution reg{0, {0.0, 0.0, 1.0, 0.0}};
  for (std::uint64_t r : {1u, 7u, 1000u}) {
    const auto f = sample(reg, r, 3);
    CHECK(f.tallies == std::vector<std::uint64_t>{0, 0, r, 0});
    CHECK(f.frequency(2) == 1.0);
  }
}

TEST_CASE("uniform register frequencies concentrate") {
  const RegisterDistribution reg{0, {0.25, 0.25, 0.25, 0.25}};
  const auto f = sample(reg, 100000, 12345);
  // binomial sd at R = 1e5 is about 0.00137; 0.02 is far outside any plausible draw
  for (int j = 0; j < 4; ++j) CHECK(std::abs(f.frequency(j) - 0.25) < 0.02);
  std::uint64_t total = 0;
  for (auto t : f.tallies) total += t;
  CHECK(total == 100000);
  CHECK(sample(reg, 1000, 9).tallies == sample(reg, 1000, 9).tallies);
  CHECK(sample(reg, 1000, 9).tallies != sample(reg, 1000, 10).tallies);
}

TEST_CASE("sampling rejects bad input") {
  CHECK_THROWS_AS(sample(RegisterDistribution{0, {1.0}}, 0, 1), PreconditionError);
  CHECK_THROWS_AS(sample(RegisterDistribution{0, {0.5, 0.6}}, 1, 1), ContractError);
  CHECK_THROWS_AS(sample(RegisterDistribution{0, {1.5, -0.5}}, 1, 1), ContractError);
}

TEST_CASE("parallel sampling equals sequential sampling") {
  const auto cfg = make_config(DigitConfig::uniform(4, 2, 2, 3));
  const auto table = synthetic_born(project(std::vector<double>{1.25, 7.5, 0.75}, cfg), 0.7);
  const auto a = sample_all(table, 500, 77, 1);
  const auto b = sample_all(table, 500, 77, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t s = 0; s < a.size(); ++s) CHECK(a[s].tallies == b[s].tallies);
}

TEST_CASE("synthetic Born registers") {
  const auto cfg = make_config(DigitConfig::uniform(3, 0, 1, 1, true));
  const DigitVector truth(cfg, {1, -1});
  const auto table = synthetic_born(truth, 0.8);
  CHECK(table[0].min_digit == -1);
  CHECK(table[0].probs[0] == doctest::Approx(0.1));
  CHECK(table[0].probs[1] == doctest::Approx(0.1));
  CHECK(table[0].probs[2] == 0.8);
  CHECK(table[1].probs[0] == 0.8);
  CHECK(table[1].probs[2] == doctest::Approx(0.1));
  for (const auto& reg : table) CHECK_NOTHROW(reg.validate());
  CHECK(point_mass_born(truth)[1].probs == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("candidate policies") {
  EmpiricalDigitDistribution f{0, 10, {6, 3, 1, 0}};
  CHECK(candidates(f, CandidatePolicy::full()) == std::vector<int>{0, 1, 2, 3});
  CHECK(candidates(f, CandidatePolicy::top(2)) == std::vector<int>{0, 1});
  CHECK(candidates(f, CandidatePolicy::threshold(0.25)) == std::vector<int>{0, 1});
  CHECK(candidates(f, CandidatePolicy::threshold(0.7)) == std::vector<int>{0});  // fallback
  // unobserved digits never enter a top-r set
  CHECK(candidates(f, CandidatePolicy::top(10)) == std::vector<int>{0, 1, 2});
  EmpiricalDigitDistribution point{0, 5, {0, 5, 0}};
  CHECK(candidates(point, CandidatePolicy::top(2)) == std::vector<int>{1});

  // frequency ties go to the smaller digit; output sorted ascending
  EmpiricalDigitDistribution tie{-1, 10, {2, 4, 4}};
  CHECK(candidates(tie, CandidatePolicy::top(1)) == std::vector<int>{0});
  CHECK(candidates(tie, CandidatePolicy::top(2)) == std::vector<int>{0, 1});
  EmpiricalDigitDistribution rev{0, 10, {1, 2, 7}};
  CHECK(candidates(rev, CandidatePolicy::top(2)) == std::vector<int>{1, 2});
  CHECK_THROWS_AS(candidates(f, CandidatePolicy::top(0)), PreconditionError);
}

TEST_CASE("entropy") {
  CHECK(entropy(std::vector<double>{1.0, 0.0, 0.0}) == 0.0);
  CHECK(entropy(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  CHECK(entropy(std::vector<double>{0.7, 0.1, 0.1, 0.1}) ==
        doctest::Approx(-0.7 * std::log(0.7) - 0.3 * std::log(0.1)).epsilon(1e-15));
  CHECK(entropy(std::vector<double>{0.7, 0.1, 0.1, 0.1}) == doctest::Approx(0.9404479886553263));

  const double eta = entropy_threshold(4, std::log(4.0) / 4.0);
  CHECK(refine_flag(std::log(4.0), eta));
  CHECK_FALSE(refine_flag(0.0, eta));
  CHECK(refine_flag(std::log(4.0), entropy_threshold(4, 1e-9)));
}

TEST_CASE("majority vote and shot bound") {
  CHECK(majority_vote(std::vector<int>{2, 2, 2}) == 2);
  CHECK(majority_vote(std::vector<int>{1, 0, 1, 0}) == 0);
  CHECK(majority_vote(std::vector<int>{-1, 1, 1, -1, 0}) == -1);
  CHECK_THROWS_AS(majority_vote(std::vector<int>{}), PreconditionError);
  CHECK(shots_required(0.1, 0.01, 2) == 231);
  CHECK(shots_required(0.2, 0.05, 2) == 38);
  CHECK_THROWS_AS(shots_required(0.0, 0.1, 2), PreconditionError);
  CHECK_THROWS_AS(shots_required(0.1, 1.0, 2), PreconditionError);
}

TEST_CASE("noise models: analytic MSE") {
  const auto one = DigitConfig::uniform(2, 0, 0, 1);
  CHECK(predict_mse(NoiseModel::exact(), one, 0) == 0.0);
  CHECK(predict_mse(NoiseModel::independent_flip(0.2), one, 0) == doctest::Approx(0.2));
  const auto two = DigitConfig::uniform(2, 0, 1, 1);
  CHECK(predict_mse(NoiseModel::independent_flip(0.2), two, 0) == doctest::Approx(0.25));
  CHECK(mse_bound_independent(0.2, two, 0) == doctest::Approx(0.25));
  // categorical with mean mu: cross terms mu^2 w_i w_j
  const auto cat = NoiseModel::categorical({{0, 0.5}, {1, 0.5}});
  CHECK(cat.mean() == 0.5);
  CHECK(predict_mse(cat, two, 0) == doctest::Approx(0.5 * 1.25 + 0.25 * 2 * 0.5));
  const auto corr = NoiseModel::correlated(0.3, 0.1);
  CHECK(predict_mse(corr, two, 0) == doctest::Approx(mse_bound(0.3, 0.1, two, 0)));
  CHECK_THROWS_AS(NoiseModel::correlated(0.1, 0.3), ContractError);
  CHECK_THROWS_AS(NoiseModel::independent_flip(1.5), ContractError);
}

TEST_CASE("noise models: Monte Carlo agrees with the prediction") {
  const auto cfg = DigitConfig::uniform(2, 0, 1, 1);
  const auto exact = measure_mse(NoiseModel::exact(), cfg, 0, 1000, 1);
  CHECK(exact.mean == 0.0);
  const auto est = measure_mse(NoiseModel::independent_flip(0.2), cfg, 0, 1'000'000, 2);
  CHECK(std::abs(est.mean - 0.25) <= 0.05 * 0.25);
  CHECK(std::abs(est.mean - 0.25) <= 3.0 * est.std_error);

  const auto cfg4 = DigitConfig::uniform(4, 1, 1, 1);
  const auto corr = NoiseModel::correlated(0.4, 0.15);
  const auto c = measure_mse(corr, cfg4, 0, 400'000, 3);
  CHECK(std::abs(c.mean - predict_mse(corr, cfg4, 0)) <= 4.0 * c.std_error);
  const auto t1 = measure_mse(corr, cfg4, 0, 100'000, 4, 1);
  const auto t3 = measure_mse(corr, cfg4, 0, 100'000, 4, 3);
  CHECK(t1.mean == t3.mean);
}

TEST_CASE("binary vote oracle sanity") {
  CHECK(oracle::binary_vote_error(1, 0.6, false) == doctest::Approx(0.4));
  CHECK(oracle::binary_vote_error(2, 0.6, false) == doctest::Approx(0.16));
  CHECK(oracle::binary_vote_error(2, 0.6, true) == doctest::Approx(0.64));
}
