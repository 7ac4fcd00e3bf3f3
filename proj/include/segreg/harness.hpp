#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "segreg/digit_lattice.hpp"
#include "segreg/forward_models.hpp"
#include "segreg/quantum_sampler.hpp"
#include "segreg/refinement.hpp"
#include "segreg/segmentation.hpp"

namespace segreg {

using json = nlohmann::json;

struct ModelSpec {
  enum class Kind { wave, linear, deceptive };
  Kind kind = Kind::wave;
  // wave
  std::vector<double> sensors;
  double final_time = 1.0;
  double speed = 1.0;
  // linear
  Matrix a;
};

struct SamplerSpec {
  enum class Mode { bypass, synthetic, point };
  Mode mode = Mode::bypass;
  std::uint64_t shots = 1000;
  CandidatePolicy policy;
  std::optional<double> eta_delta;
  double confidence = 0.9;
  std::optional<NoiseModel> noise;
  std::optional<std::uint64_t> seed;  // derived from the master seed when absent
};

struct ExperimentConfig {
  std::string name;
  ModelSpec model;
  DigitConfigPtr digits;
  std::optional<std::vector<double>> truth;
  std::optional<std::vector<double>> observation;  // used instead of F(truth) when given
  double sigma_obs = 0.0;
  std::optional<Matrix> weight;
  double lambda = 0.0;
  std::optional<double> omega_w0;  // geometric omega
  std::vector<double> omega;       // explicit omega
  SamplerSpec sampler;
  SearchConfig search;
  std::optional<std::vector<double>> warm_start;  // real values, projected onto the lattice
  RefinementConfig refinement;
  std::uint64_t seed = 0;
  int threads = 1;

  /// True when the seed can change the result.
  bool stochastic() const;
};

/// Throws ConfigError whose path() is a JSON pointer to the bad field.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);
/// Normalized form; parse_config(to_json(c)) reproduces c.
json to_json(const ExperimentConfig& c);

/// Named configurations: "wave-full", "wave-beam2", "linear-convex".
json preset_json(const std::string& name);
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

ForwardModelPtr build_model(const ExperimentConfig& c);

struct Stage {
  std::string name;
  std::vector<double> theta;
  double error = 0.0;
};

struct RunArtifacts {
  HybridReport search;
  std::vector<Stage> stages;
  std::vector<TraceRow> trace;  // segmentation rows followed by refinement rows
  std::vector<double> theta;
  double error = 0.0;
  std::vector<double> observation;
  std::optional<std::vector<double>> abs_error;
  std::uint64_t predicted_calls = 0;
  std::uint64_t logical_calls = 0;    // search raw count + refinement grid points
  std::uint64_t forward_calls = 0;    // model counter
  std::uint64_t diagnostic_calls = 0; // counter share outside the search
  double wall_seconds = 0.0;
};

/// Runs sampler -> segmentation -> refinement. The truth only feeds the
/// observation, the synthetic sampler and the post-hoc errors.
RunArtifacts run_experiment(const ExperimentConfig& c);

/// Report document; no wall time and no seed for deterministic configs, so
/// it is byte-stable across seeds and thread counts where it should be.
json report_json(const ExperimentConfig& c, const RunArtifacts& a);
void write_trace_csv(std::ostream& os, const RunArtifacts& a);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;
  bool pass() const;
};

/// "bounds", "noise", "beam", "anneal", "accounting".
SuiteResult verify(const std::string& suite, std::uint64_t seed = 1);
std::vector<std::string> suite_names();

}  // namespace segreg
