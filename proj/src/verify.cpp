// Property suites behind `segreg verify`. Each check prints measured value
// against its bound; fixed seeds make the output reproducible.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "segreg/error.hpp"
#include "segreg/harness.hpp"
#include "segreg/rng.hpp"

namespace segreg {

namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix a(rows, cols);
  for (double& v : a.data) v = uniform(rng, -1.0, 1.0);
  return a;
}

// ---------------------------------------------------------------- bounds

SuiteResult bounds_suite(std::uint64_t seed) {
  SuiteResult out{"bounds", {}};
  Rng rng(derive_seed(seed, 1));

  struct Shape { int base, n, m; bool sgn; };
  const Shape shapes[] = {{2, 1, 3, false}, {4, 8, 8, false}, {3, 1, 3, true}, {10, 2, 4, false}};
  for (const auto& sh : shapes) {
    const auto cfg = make_config(DigitConfig::uniform(sh.base, sh.n, sh.m, 2, sh.sgn));
    const auto r = range(*cfg, 0);
    const double half = std::pow(static_cast<double>(sh.base), -sh.m) / 2.0;
    std::size_t violations = 0;
    std::size_t not_idempotent = 0;
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const std::vector<double> theta{uniform(rng, r.lo, r.hi), uniform(rng, r.lo, r.hi)};
      const auto y = project(theta, cfg);
      const auto back = decode(y);
      for (int k = 0; k < 2; ++k) {
        const double e = std::abs(back[k] - theta[k]);
        worst = std::max(worst, e);
        // one ulp of slack for the rounding of theta itself
        if (e > half * (1.0 + 1e-12) + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(theta[k])) {
          ++violations;
        }
      }
      if (project(back, cfg) != y) ++not_idempotent;
    }
    const auto tag = "b=" + std::to_string(sh.base) + " n=" + std::to_string(sh.n) +
                     " m=" + std::to_string(sh.m) + (sh.sgn ? " signed" : "");
    out.checks.push_back({"round trip within b^-m/2 (" + tag + ")", violations == 0,
                          fmt("worst %.3g vs bound %.3g, violations %.0f", worst, half,
                              static_cast<double>(violations))});
    out.checks.push_back({"projection idempotent (" + tag + ")", not_idempotent == 0,
                          fmt("%.0f failures in 10000", static_cast<double>(not_idempotent))});

    const auto above = project(std::vector<double>{r.hi + 1.0, r.lo - 0.5}, cfg);
    const auto clipped = decode(above);
    const bool clip_ok = clipped[0] == r.hi && clipped[1] == r.lo &&
                         clipping_error_bound(r.hi + 1.0, *cfg, 0) == 1.0 &&
                         clipping_error_bound(r.lo - 0.5, *cfg, 0) == 0.5 &&
                         clipping_error_bound(0.5 * (r.lo + r.hi), *cfg, 0) == 0.0;
    out.checks.push_back({"clipping saturates at the range ends (" + tag + ")", clip_ok,
                          fmt("range [%.10g, %.10g]", r.lo, r.hi)});
    if (!sh.sgn) {
      const double closed = std::pow(sh.base, sh.n + 1) - std::pow(sh.base, -sh.m);
      const bool ok = std::abs(closed - r.hi) <= 1e-12 * closed;
      out.checks.push_back({"direct-sum maximum equals b^(n+1) - b^-m (" + tag + ")", ok,
                            fmt("sum %.17g, closed form %.17g", r.hi, closed)});
    }
  }

  // mixed base: exhaustive nearest-point check against the sum-of-half-weights bound
  {
    const std::vector<int> bases{3, 2, 5, 2};  // n = 1, m = 2, one component
    const auto cfg = make_config(DigitConfig::mixed(bases, 1, 2, 1, false));
    double bound = 0.0;
    for (int p = 0; p < cfg->depth(); ++p) bound += cfg->weight(0, cfg->position(p)) / 2.0;
    const auto r = range(*cfg, 0);
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const double theta = uniform(rng, r.lo, r.hi);
      worst = std::max(worst, std::abs(decode(project(std::vector<double>{theta}, cfg))[0] - theta));
    }
    out.checks.push_back({"mixed-base error within sum of half weights", worst <= bound,
                          fmt("worst %.4g vs bound %.4g", worst, bound)});
  }

  // ||F(P(theta*)) - x|| <= ||F(theta*) - x|| + L ||theta* - P(theta*)||
  {
    std::size_t violations = 0;
    double tightest = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 200; ++t) {
      const std::size_t comps = 1 + t % 3;
      const auto cfg = make_config(DigitConfig::uniform(2 + t % 3, 1, 3, static_cast<int>(comps)));
      const LinearModel model(random_matrix(rng, 4, comps));
      const auto r = range(*cfg, 0);
      std::vector<double> theta(comps);
      for (double& v : theta) v = uniform(rng, r.lo, r.hi);
      auto x = model.eval(theta);
      for (double& v : x) v += uniform(rng, -0.1, 0.1);
      LossSpec spec{x, std::nullopt, 0.0, {}};
      const auto proj = project(theta, cfg);
      const auto ptheta = decode(proj);
      double dist = 0.0;
      for (std::size_t k = 0; k < comps; ++k) dist += (theta[k] - ptheta[k]) * (theta[k] - ptheta[k]);
      const double lhs = std::sqrt(error(spec, model, proj));
      const double rhs = std::sqrt(error_at(spec, model, theta)) + *model.lipschitz_bound() * std::sqrt(dist);
      if (lhs > rhs * (1.0 + 1e-12)) ++violations;
      tightest = std::min(tightest, rhs - lhs);
    }
    out.checks.push_back({"projection residual bound on random linear models", violations == 0,
                          fmt("violations %.0f of 200, smallest slack %.3g",
                              static_cast<double>(violations), tightest)});
  }
  return out;
}

// ---------------------------------------------------------------- noise

SuiteResult noise_suite(std::uint64_t seed) {
  SuiteResult out{"noise", {}};
  constexpr std::uint64_t kTrials = 1'000'000;

  struct Case {
    const char* name;
    NoiseModel noise;
    DigitConfig cfg;
  };
  const Case cases[] = {
      {"independent flips, b=2, i in {0,-1}", NoiseModel::independent_flip(0.2),
       DigitConfig::uniform(2, 0, 1, 1)},
      {"independent flips, b=4, n=1, m=2", NoiseModel::independent_flip(0.1),
       DigitConfig::uniform(4, 1, 2, 1)},
      {"correlated sigma2=0.3 rho=0.1, b=4, n=1, m=2", NoiseModel::correlated(0.3, 0.1),
       DigitConfig::uniform(4, 1, 2, 1)},
      {"categorical with bias, b=3, n=0, m=2", NoiseModel::categorical({{-1, 0.1}, {0, 0.75}, {1, 0.15}}),
       DigitConfig::uniform(3, 0, 2, 1)},
      {"correlated, mixed bases", NoiseModel::correlated(0.25, 0.05),
       DigitConfig::mixed({3, 2, 4}, 0, 2, 1, false)},
  };
  std::uint64_t stream = 0;
  for (const auto& c : cases) {
    const double pred = predict_mse(c.noise, c.cfg, 0);
    const auto est = measure_mse(c.noise, c.cfg, 0, kTrials, derive_seed(seed, ++stream));
    const double z = est.std_error > 0.0 ? std::abs(est.mean - pred) / est.std_error : 0.0;
    out.checks.push_back({std::string("analytic vs Monte Carlo MSE: ") + c.name, z <= 3.0,
                          fmt("predicted %.6g, measured %.6g, |z| = %.2f", pred, est.mean, z)});
    if (c.noise.kind == NoiseModel::Kind::correlated) {
      const double bound = mse_bound(c.noise.sigma2, c.noise.rho, c.cfg, 0);
      out.checks.push_back({std::string("correlated MSE within sigma2/rho bound: ") + c.name,
                            est.mean <= bound + 3.0 * est.std_error,
                            fmt("measured %.6g, bound %.6g", est.mean, bound)});
    }
  }
  const double hand = predict_mse(NoiseModel::independent_flip(0.2), DigitConfig::uniform(2, 0, 1, 1), 0);
  out.checks.push_back({"worked example 0.2 * (1 + 0.25)", std::abs(hand - 0.25) < 1e-15,
                        fmt("%.17g", hand)});
  return out;
}

// ---------------------------------------------------------------- beam

bool same_trace(const RunReport& a, const RunReport& b) {
  if (a.trace.size() != b.trace.size() || a.digits != b.digits) return false;
  for (std::size_t t = 0; t < a.trace.size(); ++t) {
    const auto& x = a.trace[t];
    const auto& y = b.trace[t];
    if (x.step != y.step || x.phase != y.phase || x.layer != y.layer || x.component != y.component ||
        x.digit != y.digit || x.loss != y.loss || x.calls != y.calls) {
      return false;
    }
  }
  return true;
}

SuiteResult beam_suite(std::uint64_t seed) {
  SuiteResult out{"beam", {}};
  Rng rng(derive_seed(seed, 3));

  // w = 1 beam against the plain greedy route
  {
    int mismatches = 0;
    for (int t = 0; t < 50; ++t) {
      const int comps = 1 + t % 3;
      const auto cfg = make_config(DigitConfig::uniform(2 + t % 3, 1, 2, comps, t % 2 == 1));
      const LinearModel model(random_matrix(rng, 3, static_cast<std::size_t>(comps)));
      std::vector<double> x(3);
      for (double& v : x) v = uniform(rng, -2.0, 2.0);
      LossSpec spec{x, std::nullopt, 0.0, {}};
      SearchConfig s;
      if (t % 4 == 0) s.backtrack = {1, 2};
      const auto cands = full_candidates(*cfg);
      if (!same_trace(greedy_segment(model, spec, cfg, cands, s), beam_segment(model, spec, cfg, cands, s))) {
        ++mismatches;
      }
    }
    out.checks.push_back({"beam width 1 reproduces greedy trace", mismatches == 0,
                          fmt("%.0f mismatches in 50 random instances", mismatches)});
  }

  // deceptive leading digit
  {
    const auto model = make_deceptive_model();
    const auto cfg = make_config(deceptive_config());
    LossSpec spec{{0.0}, std::nullopt, 0.0, {}};
    const auto cands = full_candidates(*cfg);
    SearchConfig s;
    const double greedy = greedy_segment(*model, spec, cfg, cands, s).theta[0];
    s.beam_width = 2;
    const double beam2 = beam_segment(*model, spec, cfg, cands, s).theta[0];
    s.beam_width = 1;
    s.backtrack = {1, 1};
    const double bt = greedy_segment(*model, spec, cfg, cands, s).theta[0];
    out.checks.push_back({"deceptive landscape traps greedy", greedy != kDeceptiveOptimum,
                          fmt("greedy ends at %.0f", greedy)});
    out.checks.push_back({"beam width 2 escapes the trap", beam2 == kDeceptiveOptimum,
                          fmt("w=2 ends at %.0f", beam2)});
    out.checks.push_back({"backtracking (s=1, k=1) corrects the leading digit", bt == kDeceptiveOptimum,
                          fmt("ends at %.0f", bt)});
  }

  // hybrid bypass and thread invariance on the narrow wave preset
  {
    auto cfg = preset("wave-beam2");
    const auto classical = report_json(cfg, run_experiment(cfg)).dump();
    auto sampled = cfg;
    sampled.sampler.mode = SamplerSpec::Mode::synthetic;
    sampled.sampler.policy = CandidatePolicy::full();
    const auto hybrid = report_json(sampled, run_experiment(sampled)).dump();
    out.checks.push_back({"full-candidate hybrid equals classical run", hybrid == classical,
                          hybrid == classical ? "reports byte-identical" : "reports differ"});
    auto threaded = cfg;
    threaded.threads = 4;
    const auto multi = report_json(threaded, run_experiment(threaded)).dump();
    out.checks.push_back({"thread count leaves the report unchanged", multi == classical,
                          multi == classical ? "1 and 4 threads byte-identical" : "reports differ"});

    auto point = cfg;
    point.sampler.mode = SamplerSpec::Mode::point;
    point.sampler.policy = CandidatePolicy::top(2);
    const auto a = run_experiment(point);
    const auto target = decode(project(*cfg.truth, cfg.digits));
    out.checks.push_back({"point-mass registers recover the projected truth", a.theta == target,
                          fmt("theta = [%.6g, %.6g, %.6g]", a.theta[0], a.theta[1], a.theta[2])});
  }
  return out;
}

// ---------------------------------------------------------------- anneal

SuiteResult anneal_suite(std::uint64_t seed) {
  SuiteResult out{"anneal", {}};
  {
    const std::vector<double> losses{0.0, 1.0};
    const auto p = softmax_probabilities(losses, 1.0);
    const double expect = 1.0 / (1.0 + std::exp(-1.0));
    out.checks.push_back({"softmax of (0, 1) at T = 1", std::abs(p[0] - expect) < 1e-15,
                          fmt("p = (%.6f, %.6f)", p[0], p[1])});
  }
  {
    Rng rng(derive_seed(seed, 4));
    const std::vector<double> losses{0.3, 0.1, 0.2};
    int hits = 0;
    for (int t = 0; t < 10000; ++t) hits += annealed_select(losses, 1e-9, rng) == 1;
    out.checks.push_back({"near-zero temperature picks the argmin", hits == 10000,
                          fmt("%.0f of 10000", hits)});
  }
  {
    // best of 500 annealed restarts per run, 200 runs
    const auto model = make_deceptive_model();
    const auto cfg = make_config(deceptive_config());
    LossSpec spec{{0.0}, std::nullopt, 0.0, {}};
    const auto cands = full_candidates(*cfg);
    SearchConfig s;
    s.selection.annealed = true;
    s.selection.schedule = Schedule::logarithmic(1.0);
    int successes = 0;
    int single_hits = 0;
    for (std::uint64_t run = 0; run < 200; ++run) {
      double best = std::numeric_limits<double>::infinity();
      double best_theta = 0.0;
      for (std::uint64_t restart = 0; restart < 500; ++restart) {
        s.selection.seed = derive_seed(derive_seed(seed, run), restart);
        const auto r = greedy_segment(*model, spec, cfg, cands, s);
        single_hits += r.theta[0] == kDeceptiveOptimum;
        if (r.loss < best) {
          best = r.loss;
          best_theta = r.theta[0];
        }
      }
      successes += best_theta == kDeceptiveOptimum;
    }
    out.checks.push_back({"annealed restarts reach the global optimum", successes >= 190,
                          fmt("%.0f of 200 runs (single-restart rate %.3f)", successes,
                              single_hits / 100000.0)});
  }
  return out;
}

// ---------------------------------------------------------------- accounting

SuiteResult accounting_suite(std::uint64_t seed) {
  SuiteResult out{"accounting", {}};
  Rng rng(derive_seed(seed, 5));

  // worked example: M = 2, d = 3, w = 1, r = 2
  {
    const auto cfg = make_config(DigitConfig::uniform(2, 1, 1, 2));
    const LinearModel model(Matrix::identity(2));
    LossSpec spec{{1.5, 0.5}, std::nullopt, 0.0, {}};
    const auto r = greedy_segment(model, spec, cfg, full_candidates(*cfg), SearchConfig{});
    out.checks.push_back({"M=2, d=3, w=1, r=2 costs 12 calls", model.calls() == 12 && r.raw_calls == 12,
                          fmt("counter %.0f", static_cast<double>(model.calls()))});
  }

  // random deterministic configurations, cache off so the counter is the logical count
  {
    int mismatches = 0;
    int formula_mismatches = 0;
    int cache_worse = 0;
    for (int t = 0; t < 40; ++t) {
      const int comps = 1 + t % 3;
      const int base = 2 + t % 3;
      const auto cfg = make_config(DigitConfig::uniform(base, 1 + t % 2, 2, comps));
      const LinearModel model(random_matrix(rng, 3, static_cast<std::size_t>(comps)));
      std::vector<double> x(3);
      for (double& v : x) v = uniform(rng, -3.0, 3.0);
      LossSpec spec{x, std::nullopt, 0.0, {}};
      SearchConfig s;
      s.beam_width = 1 + t % 4;
      s.backtrack = {2 + t % 2, 1};  // stride > depth: closed form is exact
      s.dedup = false;
      RefinementConfig refine;
      refine.multiscale = GridSpec{11 + t, 0.2};
      const auto cands = full_candidates(*cfg);
      const auto run = beam_segment(model, spec, cfg, cands, s);
      const auto ms = multiscale_refine(model, spec, run.theta, run.error, *refine.multiscale);
      const auto predicted = call_count_prediction(*cfg, cands, s, refine);
      mismatches += model.calls() != predicted || run.raw_calls + ms.calls != predicted;
      formula_mismatches += predicted != call_count_formula(comps, cfg->depth(), base, s.beam_width,
                                                            s.backtrack.stride, s.backtrack.depth,
                                                            refine.multiscale->points, 0);
      model.reset_calls();
      s.dedup = true;
      const auto cached = beam_segment(model, spec, cfg, cands, s);
      cache_worse += cached.model_calls > cached.raw_calls || model.calls() != cached.model_calls ||
                     cached.digits != run.digits;
    }
    out.checks.push_back({"observed calls equal the prediction (cache off)", mismatches == 0,
                          fmt("%.0f mismatches in 40 runs", mismatches)});
    out.checks.push_back({"prediction equals r M d w + B M k r w + M G", formula_mismatches == 0,
                          fmt("%.0f mismatches", formula_mismatches)});
    out.checks.push_back({"cache never adds calls or changes results", cache_worse == 0,
                          fmt("%.0f violations", cache_worse)});
  }

  // full wave pipeline with the cache off
  {
    auto cfg = preset("wave-full");
    cfg.search.selection.annealed = false;
    cfg.search.dedup = false;
    const auto a = run_experiment(cfg);
    const auto formula = call_count_formula(3, 17, 4, 4, 2, 1, 301, 6000);
    const bool ok = a.predicted_calls == formula && a.logical_calls == formula &&
                    a.forward_calls - a.diagnostic_calls == formula;
    out.checks.push_back({"wave pipeline: counter equals prediction", ok,
                          fmt("predicted %.0f, counter %.0f (+%.0f diagnostic)",
                              static_cast<double>(formula),
                              static_cast<double>(a.forward_calls - a.diagnostic_calls),
                              static_cast<double>(a.diagnostic_calls))});
  }
  return out;
}

}  // namespace

std::vector<std::string> suite_names() { return {"bounds", "noise", "beam", "anneal", "accounting"}; }

SuiteResult verify(const std::string& suite, std::uint64_t seed) {
  if (suite == "bounds") return bounds_suite(seed);
  if (suite == "noise") return noise_suite(seed);
  if (suite == "beam") return beam_suite(seed);
  if (suite == "anneal") return anneal_suite(seed);
  if (suite == "accounting") return accounting_suite(seed);
  throw ConfigError("", "unknown suite '" + suite + "' (bounds, noise, beam, anneal, accounting)");
}

}  // namespace segreg
