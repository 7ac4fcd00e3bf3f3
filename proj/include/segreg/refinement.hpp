#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "segreg/forward_models.hpp"
#include "segreg/quantum_sampler.hpp"

namespace segreg {

/// Uniform grid of `points` values covering [centre - radius, centre + radius].
struct GridSpec {
  int points = 1;
  double radius = 0.2;

  void validate() const;
};

struct RefinementConfig {
  std::optional<GridSpec> multiscale;
  std::optional<GridSpec> fine;
};

/// centre + (j - (G-1)/2) h, h = 2 radius / (G - 1); endpoints are exactly
/// centre -+ radius and the midpoint is exactly centre when G is odd.
std::vector<double> grid_points(double centre, const GridSpec& grid);

struct RefineStep {
  int component = 0;
  int index = -1;  // chosen grid index; -1 when the incumbent value stays
  double value = 0.0;
  double error = 0.0;
  std::uint64_t calls = 0;  // cumulative forward calls of this stage
};

struct RefineResult {
  std::vector<double> theta;
  double error = 0.0;
  std::vector<RefineStep> steps;
  std::uint64_t calls = 0;             // G or F per component
  std::uint64_t diagnostic_calls = 0;  // evaluations outside the grid sweeps
};

/// Coordinate sweeps in ascending k; each sweep sees the earlier updates.
/// The incumbent stays unless a grid point has strictly smaller E.
/// `incumbent_error` is E(theta), supplied by the caller so no call is spent on it.
RefineResult multiscale_refine(const ForwardModel& model, const LossSpec& spec,
                               std::span<const double> theta, double incumbent_error,
                               const GridSpec& grid, int threads = 1);

/// Every coordinate is swept against the same input vector, then all updates
/// are applied at once. One extra evaluation of the joint point is reported as
/// a diagnostic call; if the joint point is worse than the input, the input is kept.
RefineResult fine_tune(const ForwardModel& model, const LossSpec& spec,
                       std::span<const double> theta, double incumbent_error,
                       const GridSpec& grid, int threads = 1);

struct EntropyHookResult {
  EmpiricalTable empirical;
  CandidateSets candidates;
  std::vector<double> entropy;       // per register, before re-sampling
  std::vector<bool> flagged;
  std::uint64_t resampled_shots = 0;
};

/// Registers with H >= ln(b) - eta_delta are re-sampled once with twice the
/// shots (fresh stream), then candidates are re-extracted for every register.
EntropyHookResult entropy_refine_hook(const BornTable& born, EmpiricalTable empirical,
                                      const CandidatePolicy& policy, double eta_delta,
                                      std::uint64_t seed);

}  // namespace segreg
