#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "segreg/digit_lattice.hpp"
#include "segreg/error.hpp"
#include "segreg/rng.hpp"

using namespace segreg;

TEST_CASE("decode matches a hand digit sum") {
  const auto cfg = make_config(DigitConfig::uniform(2, 1, 1, 1));
  CHECK(decode(DigitVector(cfg, {1, 0, 1}))[0] == 2.5);
  CHECK(decode(DigitVector(cfg, {1, 1, 1}))[0] == 3.5);
  CHECK(decode(DigitVector(cfg))[0] == 0.0);
  CHECK(oracle::digit_sum({1, 0, 1}, 2, 1) == 2.5);
}

TEST_CASE("digit storage is component-major, most significant first") {
  const auto cfg = DigitConfig::uniform(10, 1, 1, 2);
  CHECK(cfg.depth() == 3);
  CHECK(cfg.slot(0, 1) == 0);
  CHECK(cfg.slot(0, -1) == 2);
  CHECK(cfg.slot(1, 1) == 3);
  CHECK(cfg.weight(1, -1) == doctest::Approx(0.1));
  CHECK_THROWS_AS(cfg.slot(2, 0), ContractError);
  CHECK_THROWS_AS(cfg.slot(0, 2), ContractError);
}

TEST_CASE("alphabets") {
  const auto u = DigitConfig::uniform(4, 0, 0, 1);
  CHECK(u.min_digit(0, 0) == 0);
  CHECK(u.max_digit(0, 0) == 3);
  const auto s4 = DigitConfig::uniform(4, 0, 0, 1, true);
  CHECK(s4.min_digit(0, 0) == -2);
  CHECK(s4.max_digit(0, 0) == 1);
  const auto s3 = DigitConfig::uniform(3, 0, 0, 1, true);
  CHECK(s3.min_digit(0, 0) == -1);
  CHECK(s3.max_digit(0, 0) == 1);
  CHECK_THROWS_AS(DigitConfig::uniform(1, 0, 0, 1), ContractError);
  CHECK_THROWS_AS(DigitConfig::uniform(2, -1, 0, 1), ContractError);
}

TEST_CASE("constructing a digit vector checks the alphabet") {
  const auto cfg = make_config(DigitConfig::uniform(2, 1, 1, 1));
  CHECK_THROWS_AS(DigitVector(cfg, {2, 0, 0}), InvalidDigitError);
  CHECK_THROWS_AS(DigitVector(cfg, {-1, 0, 0}), InvalidDigitError);
  CHECK_THROWS_AS(DigitVector(cfg, {0, 0}), ContractError);
}

TEST_CASE("range") {
  const auto big = DigitConfig::uniform(4, 8, 8, 1);
  const auto r = range(big, 0);
  CHECK(r.lo == 0.0);
  CHECK(r.hi == doctest::Approx(std::pow(4.0, 9) - std::pow(4.0, -8)).epsilon(1e-15));
  const auto s = range(DigitConfig::uniform(3, 0, 0, 1, true), 0);
  CHECK(s.lo == -1.0);
  CHECK(s.hi == 1.0);
  // direct sum agrees with the closed form b^(n+1) - b^-m for several shapes
  for (int b = 2; b <= 7; ++b) {
    for (int n = 0; n <= 3; ++n) {
      for (int m = 0; m <= 3; ++m) {
        const auto hi = range(DigitConfig::uniform(b, n, m, 1), 0).hi;
        CHECK(hi == doctest::Approx(std::pow(b, n + 1) - std::pow(b, -m)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("project rounds to the nearest multiple of b^-m") {
  const auto cfg = make_config(DigitConfig::uniform(2, 0, 3, 1));
  CHECK(decode(project(std::vector<double>{0.3}, cfg))[0] == 0.25);
  // ties go away from zero
  CHECK(decode(project(std::vector<double>{0.0625}, cfg))[0] == 0.125);
  const auto sgn = make_config(DigitConfig::uniform(3, 1, 1, 1, true));
  CHECK(decode(project(std::vector<double>{-0.5}, sgn))[0] == doctest::Approx(-2.0 / 3.0));
  CHECK(decode(project(std::vector<double>{0.5}, sgn))[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("project clamps and rejects non-finite input") {
  const auto cfg = make_config(DigitConfig::uniform(2, 1, 1, 1));
  const auto y = project(std::vector<double>{100.0}, cfg);
  CHECK(y == DigitVector(cfg, {1, 1, 1}));
  CHECK(decode(project(std::vector<double>{-3.0}, cfg))[0] == 0.0);
  CHECK_THROWS_AS(project(std::vector<double>{std::nan("")}, cfg), DomainError);
  CHECK_THROWS_AS(project(std::vector<double>{std::numeric_limits<double>::infinity()}, cfg),
                  DomainError);
  CHECK_THROWS_AS(project(std::vector<double>{0.0, 0.0}, cfg), ContractError);
}

TEST_CASE("project agrees with exhaustive nearest-point search") {
  Rng rng(7);
  struct Shape { int b, n, m; bool sgn; };
  for (const auto& sh : {Shape{2, 1, 3, false}, Shape{3, 1, 2, true}, Shape{4, 0, 2, false},
                         Shape{5, 1, 1, true}, Shape{4, 1, 1, true}}) {
    const auto cfg = make_config(DigitConfig::uniform(sh.b, sh.n, sh.m, 1, sh.sgn));
    const auto r = range(*cfg, 0);
    for (int t = 0; t < 300; ++t) {
      const double theta = r.lo - 0.5 + (r.hi - r.lo + 1.0) * uniform01(rng);
      const double got = decode(project(std::vector<double>{theta}, cfg))[0];
      const double want = oracle::nearest_value(theta, *cfg);
      CHECK(std::abs(got - theta) == doctest::Approx(std::abs(want - theta)).epsilon(1e-12));
    }
  }
}

TEST_CASE("mixed-base projection stays within the half-weight bound") {
  const auto cfg = make_config(DigitConfig::mixed({3, 2, 5, 2}, 1, 2, 1, false));
  double bound = 0.0;
  for (int p = 0; p < cfg->depth(); ++p) bound += cfg->weight(0, cfg->position(p)) / 2.0;
  Rng rng(3);
  const auto r = range(*cfg, 0);
  for (int t = 0; t < 2000; ++t) {
    const double theta = r.lo + (r.hi - r.lo) * uniform01(rng);
    const double got = decode(project(std::vector<double>{theta}, cfg))[0];
    CHECK(std::abs(got - theta) <= bound);
  }
}

TEST_CASE("perturb") {
  const auto cfg = make_config(DigitConfig::uniform(2, 1, 1, 1));
  const DigitVector v(cfg, {1, 0, 1});
  CHECK(perturb(v, 0, 1, 1) == v);
  CHECK(decode(perturb(v, 0, 0, 1))[0] == 3.5);
  CHECK(perturb(perturb(v, 0, 0, 1), 0, 0, 0) == v);
  CHECK(decode(v)[0] == 2.5);  // input untouched
  CHECK_THROWS_AS(perturb(v, 0, 0, 2), InvalidDigitError);
}

TEST_CASE("clipping error bound") {
  const auto cfg = DigitConfig::uniform(2, 1, 1, 1);
  const auto r = range(cfg, 0);
  CHECK(clipping_error_bound(1.0, cfg, 0) == 0.0);
  CHECK(clipping_error_bound(r.hi + 1.0, cfg, 0) == 1.0);
  const auto sgn = DigitConfig::uniform(3, 1, 1, 1, true);
  CHECK(clipping_error_bound(range(sgn, 0).lo - 0.5, sgn, 0) == doctest::Approx(0.5));
}

TEST_CASE("decode is strictly monotone in each unsigned digit") {
  const auto cfg = make_config(DigitConfig::uniform(3, 1, 1, 2));
  const DigitVector base(cfg, {1, 0, 2, 0, 1, 1});
  for (int k = 0; k < 2; ++k) {
    for (int i = -1; i <= 1; ++i) {
      double prev = -1e9;
      for (int j = 0; j < 3; ++j) {
        const double v = decode(perturb(base, k, i, j))[k];
        CHECK(v > prev);
        prev = v;
      }
    }
  }
}
