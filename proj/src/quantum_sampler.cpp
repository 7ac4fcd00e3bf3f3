#include "segreg/quantum_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "segreg/error.hpp"
#include "segreg/kernels.hpp"
#include "segreg/rng.hpp"

namespace segreg {

void RegisterDistribution::validate() const {
  if (probs.empty()) throw ContractError("register distribution is empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ContractError("register distribution has a negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ContractError("register probabilities sum to " + std::to_string(sum));
  }
}

double EmpiricalDigitDistribution::frequency(int digit) const {
  if (digit < min_digit || digit > max_digit() || shots == 0) return 0.0;
  return static_cast<double>(tallies[static_cast<std::size_t>(digit - min_digit)]) /
         static_cast<double>(shots);
}

std::vector<double> EmpiricalDigitDistribution::frequencies() const {
  std::vector<double> f(tallies.size(), 0.0);
  if (shots == 0) return f;
  for (std::size_t j = 0; j < f.size(); ++j) {
    f[j] = static_cast<double>(tallies[j]) / static_cast<double>(shots);
  }
  return f;
}

BornTable synthetic_born(const DigitVector& truth, double confidence) {
  if (!(confidence > 0.0 && confidence <= 1.0)) {
    throw ContractError("synthetic_born: confidence must lie in (0, 1]");
  }
  const auto& cfg = truth.config();
  BornTable table(cfg.size());
  for (std::size_t s = 0; s < cfg.size(); ++s) {
    const int lo = cfg.min_digit_at(s);
    const auto size = static_cast<std::size_t>(cfg.base_at(s));
    const double rest = (1.0 - confidence) / static_cast<double>(size - 1);
    table[s].min_digit = lo;
    table[s].probs.assign(size, rest);
    table[s].probs[static_cast<std::size_t>(truth.digits()[s] - lo)] = confidence;
  }
  return table;
}

BornTable point_mass_born(const DigitVector& truth) { return synthetic_born(truth, 1.0); }

EmpiricalDigitDistribution sample(const RegisterDistribution& reg, std::uint64_t shots,
                                  std::uint64_t seed) {
  if (shots == 0) throw PreconditionError("sample: need at least one shot");
  reg.validate();
  std::vector<double> cdf(reg.probs.size());
  std::partial_sum(reg.probs.begin(), reg.probs.end(), cdf.begin());
  cdf.back() = 1.0;

  EmpiricalDigitDistribution f;
  f.min_digit = reg.min_digit;
  f.shots = shots;
  f.tallies.assign(reg.probs.size(), 0);
  Rng rng(seed);
  for (std::uint64_t r = 0; r < shots; ++r) {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto j = static_cast<std::size_t>(it - cdf.begin());
    // guard against zero-probability tails picked up by rounding in the cdf
    while (j > 0 && (j >= cdf.size() || reg.probs[j] == 0.0)) --j;
    while (reg.probs[j] == 0.0) ++j;
    ++f.tallies[j];
  }
  return f;
}

EmpiricalTable sample_all(const BornTable& table, std::uint64_t shots, std::uint64_t seed,
                          int threads) {
  EmpiricalTable out(table.size());
  const auto count = static_cast<std::int64_t>(table.size());
  if (threads <= 1) {
    for (std::int64_t s = 0; s < count; ++s) {
      out[s] = sample(table[s], shots, derive_seed(seed, static_cast<std::uint64_t>(s)));
    }
    return out;
  }
  // validate up front so nothing throws inside the parallel region
  if (shots == 0) throw PreconditionError("sample: need at least one shot");
  for (const auto& reg : table) reg.validate();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::int64_t s = 0; s < count; ++s) {
    out[s] = sample(table[s], shots, derive_seed(seed, static_cast<std::uint64_t>(s)));
  }
  return out;
}

std::vector<int> candidates(const EmpiricalDigitDistribution& f, const CandidatePolicy& policy) {
  const int size = static_cast<int>(f.tallies.size());
  std::vector<int> all(static_cast<std::size_t>(size));
  std::iota(all.begin(), all.end(), f.min_digit);
  if (policy.kind == CandidatePolicy::Kind::full) return all;

  // rank by tally, descending; equal tallies keep ascending digit order
  std::vector<int> ranked = all;
  std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
    return f.tallies[static_cast<std::size_t>(a - f.min_digit)] >
           f.tallies[static_cast<std::size_t>(b - f.min_digit)];
  });

  std::vector<int> chosen;
  if (policy.kind == CandidatePolicy::Kind::top_r) {
    if (policy.r < 1) throw PreconditionError("candidates: r must be >= 1");
    // only digits that were actually observed; a point mass yields one candidate
    for (int j : ranked) {
      if (chosen.size() == static_cast<std::size_t>(policy.r)) break;
      if (f.tallies[static_cast<std::size_t>(j - f.min_digit)] > 0) chosen.push_back(j);
    }
    if (chosen.empty()) chosen.push_back(ranked.front());
  } else {
    if (!(policy.tau > 0.0 && policy.tau <= 1.0)) {
      throw PreconditionError("candidates: tau must lie in (0, 1]");
    }
    for (int j : all) {
      if (f.frequency(j) >= policy.tau) chosen.push_back(j);
    }
    if (chosen.empty()) chosen.push_back(ranked.front());
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

CandidateSets candidates(const EmpiricalTable& table, const CandidatePolicy& policy) {
  CandidateSets sets;
  sets.reserve(table.size());
  for (const auto& f : table) sets.push_back(candidates(f, policy));
  return sets;
}

CandidateSets full_candidates(const DigitConfig& cfg) {
  CandidateSets sets(cfg.size());
  for (std::size_t s = 0; s < cfg.size(); ++s) {
    for (int j = cfg.min_digit_at(s); j <= cfg.max_digit_at(s); ++j) sets[s].push_back(j);
  }
  return sets;
}

double entropy(std::span<const double> frequencies) {
  double h = 0.0;
  for (double f : frequencies) {
    if (f > 0.0) h -= f * std::log(f);
  }
  return h;
}

double entropy(const EmpiricalDigitDistribution& f) {
  const auto freq = f.frequencies();
  return entropy(freq);
}

double entropy_threshold(int base, double eta_delta) {
  return std::log(static_cast<double>(base)) - eta_delta;
}

int majority_vote(std::span<const int> shots) {
  if (shots.empty()) throw PreconditionError("majority_vote: no shots");
  const auto [lo_it, hi_it] = std::minmax_element(shots.begin(), shots.end());
  const int lo = *lo_it;
  std::vector<std::size_t> counts(static_cast<std::size_t>(*hi_it - lo + 1), 0);
  for (int s : shots) ++counts[static_cast<std::size_t>(s - lo)];
  // max_element returns the first maximum, i.e. the smaller digit on ties
  const auto best = std::max_element(counts.begin(), counts.end());
  return lo + static_cast<int>(best - counts.begin());
}

std::uint64_t shots_required(double margin, double failure, int base) {
  if (!(margin > 0.0 && margin < 1.0)) throw PreconditionError("shots_required: margin must lie in (0, 1)");
  if (!(failure > 0.0 && failure < 1.0)) throw PreconditionError("shots_required: failure must lie in (0, 1)");
  if (base < 2) throw PreconditionError("shots_required: base must be >= 2");
  const double n = std::log((base - 1) / failure) / (2.0 * margin * margin);
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(n)));
}

NoiseModel NoiseModel::independent_flip(double eps) {
  NoiseModel m;
  m.kind = Kind::independent_flip;
  m.epsilon = eps;
  m.validate();
  return m;
}

NoiseModel NoiseModel::categorical(std::vector<std::pair<int, double>> pmf) {
  NoiseModel m;
  m.kind = Kind::categorical;
  m.pmf = std::move(pmf);
  m.validate();
  return m;
}

NoiseModel NoiseModel::correlated(double sigma2, double rho) {
  NoiseModel m;
  m.kind = Kind::correlated;
  m.sigma2 = sigma2;
  m.rho = rho;
  m.validate();
  return m;
}

void NoiseModel::validate() const {
  switch (kind) {
    case Kind::exact:
      return;
    case Kind::independent_flip:
      if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("noise: epsilon must lie in [0, 1]");
      return;
    case Kind::categorical: {
      if (pmf.empty()) throw ContractError("noise: categorical law is empty");
      double sum = 0.0;
      for (const auto& [v, p] : pmf) {
        if (!(p >= 0.0)) throw ContractError("noise: negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw ContractError("noise: categorical law must sum to 1");
      return;
    }
    case Kind::correlated:
      if (!(rho >= 0.0 && rho < 1.0)) throw ContractError("noise: rho must lie in [0, 1)");
      if (!(sigma2 >= rho && sigma2 <= 1.0)) {
        throw ContractError("noise: correlated model needs rho <= sigma2 <= 1");
      }
      return;
  }
}

double NoiseModel::second_moment() const {
  switch (kind) {
    case Kind::exact: return 0.0;
    case Kind::independent_flip: return epsilon;
    case Kind::categorical: {
      double m2 = 0.0;
      for (const auto& [v, p] : pmf) m2 += p * v * v;
      return m2;
    }
    case Kind::correlated: return sigma2;
  }
  return 0.0;
}

double NoiseModel::mean() const {
  if (kind != Kind::categorical) return 0.0;
  double mu = 0.0;
  for (const auto& [v, p] : pmf) mu += p * v;
  return mu;
}

double NoiseModel::cross_moment() const {
  switch (kind) {
    case Kind::exact:
    case Kind::independent_flip: return 0.0;
    case Kind::categorical: return mean() * mean();
    case Kind::correlated: return rho;
  }
  return 0.0;
}

namespace {

std::vector<double> component_weights(const DigitConfig& cfg, int k) {
  std::vector<double> w(static_cast<std::size_t>(cfg.depth()));
  for (int p = 0; p < cfg.depth(); ++p) w[p] = cfg.weight(k, cfg.position(p));
  return w;
}

// sum_i w_i^2 and sum_{i != j} w_i w_j
std::pair<double, double> weight_sums(const std::vector<double>& w) {
  double diag = 0.0;
  double total = 0.0;
  for (double v : w) {
    diag += v * v;
    total += v;
  }
  return {diag, total * total - diag};
}

}  // namespace

double predict_mse(const NoiseModel& noise, const DigitConfig& cfg, int k) {
  noise.validate();
  const auto w = component_weights(cfg, k);
  // off-diagonal sum computed pairwise to avoid cancellation in total^2 - diag
  double diag = 0.0;
  double off = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    diag += w[i] * w[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (i != j) off += w[i] * w[j];
    }
  }
  return noise.second_moment() * diag + noise.cross_moment() * off;
}

MseEstimate measure_mse(const NoiseModel& noise, const DigitConfig& cfg, int k,
                        std::uint64_t trials, std::uint64_t seed, int threads) {
  noise.validate();
  if (trials < 2) throw PreconditionError("measure_mse: need at least two trials");
  const auto w = component_weights(cfg, k);

  std::vector<double> pmf_cdf;
  if (noise.kind == NoiseModel::Kind::categorical) {
    double acc = 0.0;
    for (const auto& [v, p] : noise.pmf) pmf_cdf.push_back(acc += p);
    pmf_cdf.back() = 1.0;
  }
  const double flip_p = noise.kind == NoiseModel::Kind::correlated
                            ? (noise.sigma2 - noise.rho) / (1.0 - noise.rho)
                            : noise.epsilon;

  auto draw_flip = [](Rng& rng, double p) {
    const double u = uniform01(rng);
    if (u < 0.5 * p) return -1;
    if (u < p) return 1;
    return 0;
  };

  const kernels::ChunkFn chunk_fn = [&](std::uint64_t c, std::uint64_t size) {
    Rng rng(derive_seed(seed, c));
    kernels::Moments m;
    for (std::uint64_t t = 0; t < size; ++t) {
      double err = 0.0;
      switch (noise.kind) {
        case NoiseModel::Kind::exact:
          break;
        case NoiseModel::Kind::independent_flip:
          for (double wi : w) err += draw_flip(rng, flip_p) * wi;
          break;
        case NoiseModel::Kind::categorical:
          for (double wi : w) {
            const double u = uniform01(rng);
            const auto it = std::upper_bound(pmf_cdf.begin(), pmf_cdf.end(), u);
            const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - pmf_cdf.begin()),
                                                   pmf_cdf.size() - 1);
            err += noise.pmf[idx].first * wi;
          }
          break;
        case NoiseModel::Kind::correlated:
          if (uniform01(rng) < noise.rho) {
            const int shock = uniform01(rng) < 0.5 ? -1 : 1;
            for (double wi : w) err += shock * wi;
          } else {
            for (double wi : w) err += draw_flip(rng, flip_p) * wi;
          }
          break;
      }
      const double sq = err * err;
      m.sum += sq;
      m.sum_sq += sq * sq;
    }
    m.count = size;
    return m;
  };

  constexpr std::uint64_t kChunk = 1 << 15;
  const auto moments = kernels::accumulate_chunks(trials, kChunk, chunk_fn, threads);
  MseEstimate est;
  est.trials = moments.count;
  const auto n = static_cast<double>(moments.count);
  est.mean = moments.sum / n;
  const double var = std::max(0.0, (moments.sum_sq - n * est.mean * est.mean) / (n - 1.0));
  est.std_error = std::sqrt(var / n);
  return est;
}

double mse_bound(double sigma2, double rho, const DigitConfig& cfg, int k) {
  const auto [diag, off] = weight_sums(component_weights(cfg, k));
  return sigma2 * diag + rho * off;
}

double mse_bound_independent(double epsilon, const DigitConfig& cfg, int k) {
  return mse_bound(epsilon, 0.0, cfg, k);
}

}  // namespace segreg
