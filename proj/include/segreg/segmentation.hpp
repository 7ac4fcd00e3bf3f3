#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segreg/digit_lattice.hpp"
#include "segreg/forward_models.hpp"
#include "segreg/quantum_sampler.hpp"
#include "segreg/refinement.hpp"
#include "segreg/rng.hpp"

namespace segreg {

/// Temperature per layer step l = 1, 2, ...
struct Schedule {
  enum class Kind { log, exponential };
  Kind kind = Kind::exponential;
  double c = 1.0;      // log: T = c / ln(1 + l)
  double t0 = 1.0;     // exponential: T = t0 * decay^(l - 1)
  double decay = 0.85;

  static Schedule logarithmic(double c) { return {Kind::log, c, 1.0, 0.85}; }
  static Schedule exponential(double t0, double decay) { return {Kind::exponential, 1.0, t0, decay}; }

  double temperature(int step) const;
  void validate() const;
};

struct Selection {
  bool annealed = false;
  Schedule schedule;
  std::uint64_t seed = 0;
};

struct Backtrack {
  int stride = 0;  // 0 disables
  int depth = 0;

  bool enabled() const { return stride > 0 && depth > 0; }
};

struct SearchConfig {
  int beam_width = 1;
  Backtrack backtrack;
  Selection selection;
  /// Cache losses by digit string within a layer; only changes the number of
  /// real forward calls, never the result.
  bool dedup = true;
  int threads = 1;
  /// Starting digits; all zero when empty.
  std::optional<std::vector<int>> warm_start;

  void validate() const;
};

struct TraceRow {
  enum class Phase { sweep, backtrack, multiscale, fine };
  std::uint64_t step = 0;
  Phase phase = Phase::sweep;
  int layer = 0;      // digit position i for sweep/backtrack rows
  int component = 0;
  int digit = 0;      // grid index for refinement rows
  double loss = 0.0;
  std::uint64_t calls = 0;  // cumulative logical forward calls
};

struct Survivor {
  std::vector<int> digits;
  double loss = 0.0;
};

struct RunReport {
  std::vector<int> digits;
  std::vector<double> theta;
  double loss = 0.0;
  double error = 0.0;
  std::vector<TraceRow> trace;
  std::uint64_t raw_calls = 0;    // logical count: every expansion of every slot
  std::uint64_t model_calls = 0;  // forward calls actually made (after the string cache)
  /// Beam contents after every layer, best first.
  std::vector<std::vector<Survivor>> survivors;
};

/// Softmax of -loss / T with max-subtraction.
std::vector<double> softmax_probabilities(std::span<const double> losses, double temperature);
/// Index drawn from softmax_probabilities; one uniform draw.
std::size_t annealed_select(std::span<const double> losses, double temperature, Rng& rng);

/// Plain digitwise descent: one iterate, no string cache. Kept separate from
/// beam_segment as an independent route to the same trace.
RunReport greedy_segment(const ForwardModel& model, const LossSpec& spec,
                         const DigitConfigPtr& cfg, const CandidateSets& candidates,
                         const SearchConfig& search);

RunReport beam_segment(const ForwardModel& model, const LossSpec& spec, const DigitConfigPtr& cfg,
                       const CandidateSets& candidates, const SearchConfig& search);

/// Sampler side of the hybrid loop.
struct HybridConfig {
  BornTable born;
  std::uint64_t shots = 1000;
  CandidatePolicy policy;
  std::optional<double> eta_delta;  // entropy hook off when empty
  std::uint64_t seed = 0;
};

struct HybridReport {
  RunReport run;
  bool sampled = false;  // false when the policy bypasses the sampler
  std::vector<double> entropy;
  std::vector<bool> flagged;
  std::uint64_t shots_used = 0;
  CandidateSets candidates;
};

/// Samples once, extracts candidate sets (optionally after one entropy-driven
/// re-sampling round), then runs beam_segment on the fixed sets. The full
/// policy ignores the samples and therefore skips sampling entirely.
HybridReport hybrid_segment(const ForwardModel& model, const LossSpec& spec,
                            const DigitConfigPtr& cfg, const HybridConfig& hybrid,
                            const SearchConfig& search);

/// Forward calls of a deterministic run: every layer sweep and backtracking
/// re-sweep of every beam slot, plus M*G + M*F refinement calls.
std::uint64_t call_count_prediction(const DigitConfig& cfg, const CandidateSets& candidates,
                                    const SearchConfig& search, const RefinementConfig& refine);

/// r M d w + B M k r w + M G + M F with B = floor(d / s). Matches
/// call_count_prediction for uniform |C| = r when s > k.
std::uint64_t call_count_formula(int components, int depth, int r, int w, int stride, int depth_bt,
                                 int g, int f);

std::string to_string(TraceRow::Phase phase);

}  // namespace segreg
