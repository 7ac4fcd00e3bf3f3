#include "segreg/refinement.hpp"

#include <cmath>
#include <string>

#include "segreg/error.hpp"
#include "segreg/kernels.hpp"
#include "segreg/rng.hpp"

namespace segreg {

void GridSpec::validate() const {
  if (points < 1) throw ContractError("grid: need at least one point");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ContractError("grid: radius must be positive");
}

std::vector<double> grid_points(double centre, const GridSpec& grid) {
  grid.validate();
  if (!std::isfinite(centre)) throw DomainError("grid: centre is not finite");
  if (grid.points == 1) return {centre};
  const int g = grid.points;
  const double h = 2.0 * grid.radius / (g - 1);
  const double mid = 0.5 * (g - 1);
  std::vector<double> v(static_cast<std::size_t>(g));
  for (int j = 0; j < g; ++j) v[j] = centre + (j - mid) * h;
  v.front() = centre - grid.radius;
  v.back() = centre + grid.radius;
  return v;
}

namespace {

// argmin with ties -> closest to incumbent, then smaller value
std::size_t best_index(const std::vector<double>& values, const std::vector<double>& errors,
                       double incumbent) {
  std::size_t best = 0;
  for (std::size_t g = 1; g < values.size(); ++g) {
    if (errors[g] < errors[best]) {
      best = g;
    } else if (errors[g] == errors[best]) {
      const double dg = std::abs(values[g] - incumbent);
      const double db = std::abs(values[best] - incumbent);
      if (dg < db || (dg == db && values[g] < values[best])) best = g;
    }
  }
  return best;
}

struct SweepOutcome {
  int index = -1;
  double value = 0.0;
  double error = 0.0;
};

SweepOutcome sweep(const ForwardModel& model, const LossSpec& spec, std::span<const double> theta,
                   int k, double incumbent_error, const GridSpec& grid, int threads) {
  const auto values = grid_points(theta[k], grid);
  std::vector<double> errors(values.size());
  kernels::sweep_component(model, spec, theta, k, values, errors, threads);
  for (std::size_t g = 0; g < errors.size(); ++g) {
    if (!std::isfinite(errors[g])) {
      throw ModelError("refinement: non-finite error at component " + std::to_string(k) +
                       ", value " + std::to_string(values[g]));
    }
  }
  const auto b = best_index(values, errors, theta[k]);
  if (incumbent_error <= errors[b]) return {-1, theta[k], incumbent_error};
  return {static_cast<int>(b), values[b], errors[b]};
}

}  // namespace

RefineResult multiscale_refine(const ForwardModel& model, const LossSpec& spec,
                               std::span<const double> theta, double incumbent_error,
                               const GridSpec& grid, int threads) {
  grid.validate();
  RefineResult r;
  r.theta.assign(theta.begin(), theta.end());
  r.error = incumbent_error;
  for (int k = 0; k < static_cast<int>(r.theta.size()); ++k) {
    const auto o = sweep(model, spec, r.theta, k, r.error, grid, threads);
    r.theta[k] = o.value;
    r.error = o.error;
    r.calls += static_cast<std::uint64_t>(grid.points);
    r.steps.push_back({k, o.index, o.value, o.error, r.calls});
  }
  return r;
}

RefineResult fine_tune(const ForwardModel& model, const LossSpec& spec,
                       std::span<const double> theta, double incumbent_error,
                       const GridSpec& grid, int threads) {
  grid.validate();
  RefineResult r;
  r.theta.assign(theta.begin(), theta.end());
  bool moved = false;
  for (int k = 0; k < static_cast<int>(theta.size()); ++k) {
    const auto o = sweep(model, spec, theta, k, incumbent_error, grid, threads);
    r.theta[k] = o.value;
    moved = moved || o.index >= 0;
    r.calls += static_cast<std::uint64_t>(grid.points);
    r.steps.push_back({k, o.index, o.value, o.error, r.calls});
  }
  if (!moved) {
    r.error = incumbent_error;
    return r;
  }
  r.error = error_at(spec, model, r.theta);
  r.diagnostic_calls = 1;
  if (!(r.error <= incumbent_error)) {
    // coupled coordinates: the joint move overshot, fall back to the input
    r.theta.assign(theta.begin(), theta.end());
    r.error = incumbent_error;
  }
  return r;
}

EntropyHookResult entropy_refine_hook(const BornTable& born, EmpiricalTable empirical,
                                      const CandidatePolicy& policy, double eta_delta,
                                      std::uint64_t seed) {
  if (born.size() != empirical.size()) throw ContractError("entropy hook: table sizes disagree");
  EntropyHookResult out;
  out.entropy.resize(empirical.size());
  out.flagged.resize(empirical.size());
  for (std::size_t s = 0; s < empirical.size(); ++s) {
    const int base = static_cast<int>(empirical[s].tallies.size());
    out.entropy[s] = entropy(empirical[s]);
    out.flagged[s] = refine_flag(out.entropy[s], entropy_threshold(base, eta_delta));
    if (out.flagged[s]) {
      const auto shots = 2 * empirical[s].shots;
      empirical[s] = sample(born[s], shots, derive_seed(derive_seed(seed, 0x5eed), s));
      out.resampled_shots += shots;
    }
  }
  out.candidates = candidates(empirical, policy);
  out.empirical = std::move(empirical);
  return out;
}

}  // namespace segreg
