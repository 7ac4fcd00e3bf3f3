#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "segreg/error.hpp"
#include "segreg/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kContractError = 3;
constexpr int kAcceptanceFailure = 4;

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw segreg::ConfigError("", "cannot write '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segreg: digit-lattice segmentation regression"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_name;
  std::string out_path;
  std::string trace_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  auto* run = app.add_subcommand("run", "run an experiment and write its report");
  auto* cfg_opt = run->add_option("--config", config_path, "experiment JSON");
  run->add_option("--preset", preset_name, "run a named preset instead of a file")->excludes(cfg_opt);
  run->add_option("--out", out_path, "report JSON ('-' for stdout)");
  run->add_option("--trace", trace_path, "trace CSV");
  run->add_option("--seed", seed, "override the master seed");
  run->add_option("--threads", threads, "worker threads (default: SEGREG_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  std::string show_name;
  auto* pre = app.add_subcommand("preset", "print a named configuration");
  pre->add_option("name", show_name, "wave-full | wave-beam2 | linear-convex")->required();
  pre->add_option("--out", out_path, "write to file instead of stdout");

  std::string suite;
  std::uint64_t verify_seed = 1;
  auto* ver = app.add_subcommand("verify", "run a property suite");
  ver->add_option("--suite", suite, "bounds | noise | beam | anneal | accounting | all")->required();
  ver->add_option("--seed", verify_seed, "suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      if (config_path.empty() && preset_name.empty()) {
        throw segreg::ConfigError("", "run needs --config or --preset");
      }
      auto cfg = config_path.empty() ? segreg::preset(preset_name) : segreg::load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (threads) cfg.threads = *threads;
      const auto artifacts = segreg::run_experiment(cfg);
      const auto report = segreg::report_json(cfg, artifacts).dump(2) + "\n";
      if (!out_path.empty()) write_text(out_path, report);
      if (!trace_path.empty()) {
        std::ofstream csv(trace_path, std::ios::binary | std::ios::trunc);
        if (!csv) throw segreg::ConfigError("", "cannot write '" + trace_path + "'");
        segreg::write_trace_csv(csv, artifacts);
      }
      std::fprintf(stderr, "theta =");
      for (double v : artifacts.theta) std::fprintf(stderr, " %.10g", v);
      std::fprintf(stderr, "  E = %.6g  calls = %llu (predicted %llu)  %.2fs\n", artifacts.error,
                   static_cast<unsigned long long>(artifacts.forward_calls),
                   static_cast<unsigned long long>(artifacts.predicted_calls), artifacts.wall_seconds);
      if (out_path.empty()) std::cout << report;
      return kOk;
    }
    if (*pre) {
      const auto text = segreg::preset_json(show_name).dump(2) + "\n";
      write_text(out_path.empty() ? "-" : out_path, text);
      return kOk;
    }
    if (*ver) {
      std::vector<std::string> suites{suite};
      if (suite == "all") suites = segreg::suite_names();
      bool all_pass = true;
      for (const auto& name : suites) {
        const auto result = segreg::verify(name, verify_seed);
        for (const auto& c : result.checks) {
          std::printf("[%s] %s: %s -- %s\n", c.pass ? "PASS" : "FAIL", name.c_str(), c.name.c_str(),
                      c.detail.c_str());
        }
        all_pass = all_pass && result.pass();
      }
      return all_pass ? kOk : kAcceptanceFailure;
    }
  } catch (const segreg::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const segreg::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kContractError;
  }
  return kOk;
}
