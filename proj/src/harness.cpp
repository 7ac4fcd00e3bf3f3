#include "segreg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <ostream>
#include <set>

#include "segreg/error.hpp"
#include "segreg/kernels.hpp"
#include "segreg/rng.hpp"

namespace segreg {

namespace {

// Seed streams split off the master seed.
constexpr std::uint64_t kAnnealSeed = 10;
constexpr std::uint64_t kSamplerSeed = 20;
constexpr std::uint64_t kObservationSeed = 30;

// Read-only view of one JSON object with pointer-style error paths.
class Obj {
 public:
  Obj(const json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where(), "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items()) {
      if (!ok.count(item.key())) throw ConfigError(path_ + "/" + item.key(), "unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return path_ + "/" + key; }

  double number(const char* key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) return need(key, fallback);
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key), "must be finite");
    return x;
  }

  std::int64_t integer(const char* key, std::optional<std::int64_t> fallback = std::nullopt,
                       std::int64_t min = std::numeric_limits<std::int64_t>::min()) const {
    std::int64_t x = 0;
    if (!has(key)) {
      if (!fallback) throw ConfigError(path(key), "required field is missing");
      x = *fallback;
    } else {
      const auto& v = j_.at(key);
      if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
      x = v.get<std::int64_t>();
    }
    if (x < min) throw ConfigError(path(key), "must be >= " + std::to_string(min));
    return x;
  }

  std::uint64_t seed(const char* key) const {
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(path(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(path(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const char* key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (!fallback) throw ConfigError(path(key), "required field is missing");
      return *fallback;
    }
    if (!j_.at(key).is_string()) throw ConfigError(path(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  std::vector<double> numbers(const char* key) const { return to_numbers(j_.at(key), path(key)); }

  static std::vector<double> to_numbers(const json& v, const std::string& p) {
    if (!v.is_array()) throw ConfigError(p, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t t = 0; t < v.size(); ++t) {
      if (!v[t].is_number() || !std::isfinite(v[t].get<double>())) {
        throw ConfigError(p + "/" + std::to_string(t), "expected a finite number");
      }
      out.push_back(v[t].get<double>());
    }
    return out;
  }

  static Matrix to_matrix(const json& v, const std::string& p) {
    if (!v.is_array() || v.empty()) throw ConfigError(p, "expected a non-empty array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < v.size(); ++r) {
      rows.push_back(to_numbers(v[r], p + "/" + std::to_string(r)));
      if (rows.back().size() != rows.front().size() || rows.back().empty()) {
        throw ConfigError(p + "/" + std::to_string(r), "rows must be non-empty and of equal length");
      }
    }
    return Matrix::from_rows(rows);
  }

 private:
  std::string where() const { return path_.empty() ? "/" : path_; }
  double need(const char* key, std::optional<double> fallback) const {
    if (!fallback) throw ConfigError(path(key), "required field is missing");
    return *fallback;
  }

  const json& j_;
  std::string path_;
};

template <typename Fn>
auto as_config_error(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

ModelSpec parse_model(const json& j, int components) {
  const Obj top(j, "/model", {"kind", "sensors", "T", "c", "A"});
  const auto kind = top.string("kind");
  ModelSpec m;
  if (kind == "wave") {
    m.kind = ModelSpec::Kind::wave;
    if (!top.has("sensors")) {
      m.sensors = WaveModel::uniform_sensors(50);
    } else if (top.at("sensors").is_number_integer()) {
      const auto count = top.integer("sensors", std::nullopt, 1);
      m.sensors = WaveModel::uniform_sensors(static_cast<std::size_t>(count));
    } else {
      m.sensors = top.numbers("sensors");
      if (m.sensors.empty()) throw ConfigError(top.path("sensors"), "need at least one sensor");
    }
    m.final_time = top.number("T", 1.0);
    m.speed = top.number("c", 1.0);
    if (top.has("A")) throw ConfigError(top.path("A"), "only linear models take a matrix");
  } else if (kind == "linear") {
    m.kind = ModelSpec::Kind::linear;
    if (!top.has("A")) throw ConfigError(top.path("A"), "required field is missing");
    m.a = Obj::to_matrix(top.at("A"), top.path("A"));
    if (m.a.cols != static_cast<std::size_t>(components)) {
      throw ConfigError(top.path("A"), "matrix has " + std::to_string(m.a.cols) +
                                           " columns but the lattice has " +
                                           std::to_string(components) + " components");
    }
  } else if (kind == "deceptive") {
    m.kind = ModelSpec::Kind::deceptive;
    if (components != 1) throw ConfigError("/digits/M", "the deceptive landscape has one component");
  } else {
    throw ConfigError(top.path("kind"), "unknown model '" + kind + "' (wave, linear, deceptive)");
  }
  return m;
}

DigitConfigPtr parse_digits(const json& j) {
  const Obj o(j, "/digits", {"base", "bases", "n", "m", "signed", "M"});
  const auto n = static_cast<int>(o.integer("n", std::nullopt, 0));
  const auto m = static_cast<int>(o.integer("m", std::nullopt, 0));
  const auto comps = static_cast<int>(o.integer("M", 1, 1));
  const bool sgn = o.boolean("signed", false);
  if (o.has("base") == o.has("bases")) {
    throw ConfigError("/digits", "give exactly one of 'base' or 'bases'");
  }
  if (o.has("base")) {
    const auto b = static_cast<int>(o.integer("base", std::nullopt, 2));
    return as_config_error("/digits", [&] { return make_config(DigitConfig::uniform(b, n, m, comps, sgn)); });
  }
  const auto& arr = o.at("bases");
  if (!arr.is_array()) throw ConfigError(o.path("bases"), "expected an array of integers");
  std::vector<int> bases;
  for (std::size_t t = 0; t < arr.size(); ++t) {
    if (!arr[t].is_number_integer() || arr[t].get<int>() < 2) {
      throw ConfigError(o.path("bases") + "/" + std::to_string(t), "expected an integer >= 2");
    }
    bases.push_back(arr[t].get<int>());
  }
  return as_config_error(o.path("bases"),
                         [&] { return make_config(DigitConfig::mixed(bases, n, m, comps, sgn)); });
}

NoiseModel parse_noise(const json& j) {
  const Obj o(j, "/sampler/noise", {"kind", "epsilon", "sigma2", "rho", "pmf"});
  const auto kind = o.string("kind");
  return as_config_error("/sampler/noise", [&] {
    if (kind == "exact") return NoiseModel::exact();
    if (kind == "independent") return NoiseModel::independent_flip(o.number("epsilon"));
    if (kind == "correlated") return NoiseModel::correlated(o.number("sigma2"), o.number("rho", 0.0));
    if (kind == "categorical") {
      if (!o.has("pmf") || !o.at("pmf").is_array()) {
        throw ConfigError(o.path("pmf"), "expected [[value, probability], ...]");
      }
      std::vector<std::pair<int, double>> pmf;
      for (std::size_t t = 0; t < o.at("pmf").size(); ++t) {
        const auto& e = o.at("pmf")[t];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number()) {
          throw ConfigError(o.path("pmf") + "/" + std::to_string(t), "expected [value, probability]");
        }
        pmf.emplace_back(e[0].get<int>(), e[1].get<double>());
      }
      return NoiseModel::categorical(std::move(pmf));
    }
    throw ConfigError(o.path("kind"), "unknown noise kind '" + kind + "'");
  });
}

SamplerSpec parse_sampler(const json& j) {
  const Obj o(j, "/sampler",
              {"mode", "shots", "policy", "r", "tau", "eta_delta", "confidence", "noise", "seed"});
  SamplerSpec s;
  const auto mode = o.string("mode", "bypass");
  if (mode == "bypass") {
    s.mode = SamplerSpec::Mode::bypass;
  } else if (mode == "synthetic") {
    s.mode = SamplerSpec::Mode::synthetic;
  } else if (mode == "point") {
    s.mode = SamplerSpec::Mode::point;
  } else {
    throw ConfigError(o.path("mode"), "unknown sampler mode '" + mode + "' (bypass, synthetic, point)");
  }
  s.shots = static_cast<std::uint64_t>(o.integer("shots", 1000, 1));
  const auto policy = o.string("policy", s.mode == SamplerSpec::Mode::bypass ? "full" : "top_r");
  if (policy == "full") {
    s.policy = CandidatePolicy::full();
  } else if (policy == "top_r") {
    s.policy = CandidatePolicy::top(static_cast<int>(o.integer("r", 2, 1)));
  } else if (policy == "threshold") {
    const double tau = o.number("tau");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError(o.path("tau"), "must lie in (0, 1]");
    s.policy = CandidatePolicy::threshold(tau);
  } else {
    throw ConfigError(o.path("policy"), "unknown policy '" + policy + "' (full, top_r, threshold)");
  }
  if (s.mode == SamplerSpec::Mode::bypass && s.policy.kind != CandidatePolicy::Kind::full) {
    throw ConfigError(o.path("policy"), "a bypassed sampler only supports the full policy");
  }
  if (o.has("eta_delta")) {
    const double e = o.number("eta_delta");
    if (e < 0.0) throw ConfigError(o.path("eta_delta"), "must be >= 0");
    s.eta_delta = e;
  }
  s.confidence = o.number("confidence", 0.9);
  if (!(s.confidence > 0.0 && s.confidence <= 1.0)) {
    throw ConfigError(o.path("confidence"), "must lie in (0, 1]");
  }
  if (o.has("noise")) s.noise = parse_noise(o.at("noise"));
  if (o.has("seed")) s.seed = o.seed("seed");
  return s;
}

void parse_search(const json& j, ExperimentConfig& c) {
  const Obj o(j, "/search",
              {"beam_width", "backtrack", "selection", "lambda", "omega", "init", "warm_start", "dedup"});
  c.search.beam_width = static_cast<int>(o.integer("beam_width", 1, 1));
  c.search.dedup = o.boolean("dedup", true);
  if (o.has("backtrack")) {
    const Obj b(o.at("backtrack"), "/search/backtrack", {"stride", "depth"});
    c.search.backtrack.stride = static_cast<int>(b.integer("stride", 0, 0));
    c.search.backtrack.depth = static_cast<int>(b.integer("depth", 0, 0));
  }
  if (o.has("selection")) {
    const Obj s(o.at("selection"), "/search/selection", {"mode", "schedule", "T0", "decay", "C"});
    const auto mode = s.string("mode", "deterministic");
    if (mode == "annealed") {
      c.search.selection.annealed = true;
    } else if (mode != "deterministic") {
      throw ConfigError(s.path("mode"), "unknown selection '" + mode + "' (deterministic, annealed)");
    }
    const auto sched = s.string("schedule", "exponential");
    if (sched == "log") {
      c.search.selection.schedule = Schedule::logarithmic(s.number("C", 1.0));
    } else if (sched == "exponential") {
      c.search.selection.schedule = Schedule::exponential(s.number("T0", 1.0), s.number("decay", 0.85));
    } else {
      throw ConfigError(s.path("schedule"), "unknown schedule '" + sched + "' (log, exponential)");
    }
    as_config_error("/search/selection", [&] {
      c.search.selection.schedule.validate();
      return 0;
    });
  }
  c.lambda = o.number("lambda", 0.0);
  if (c.lambda < 0.0) throw ConfigError(o.path("lambda"), "must be >= 0");
  if (o.has("omega")) {
    if (o.at("omega").is_number()) {
      c.omega_w0 = o.number("omega");
      if (*c.omega_w0 < 0.0) throw ConfigError(o.path("omega"), "must be >= 0");
    } else {
      c.omega = o.numbers("omega");
      if (c.omega.size() != c.digits->size()) {
        throw ConfigError(o.path("omega"), "need one weight per digit (" +
                                               std::to_string(c.digits->size()) + ")");
      }
      for (double w : c.omega) {
        if (w < 0.0) throw ConfigError(o.path("omega"), "weights must be >= 0");
      }
    }
  }
  const auto init = o.string("init", "zero");
  if (init == "warm") {
    if (!o.has("warm_start")) throw ConfigError(o.path("warm_start"), "warm init needs start values");
    c.warm_start = o.numbers("warm_start");
    if (c.warm_start->size() != static_cast<std::size_t>(c.digits->components())) {
      throw ConfigError(o.path("warm_start"), "need one value per component");
    }
  } else if (init != "zero") {
    throw ConfigError(o.path("init"), "unknown init '" + init + "' (zero, warm)");
  } else if (o.has("warm_start")) {
    throw ConfigError(o.path("warm_start"), "only used with init 'warm'");
  }
}

GridSpec parse_grid(const json& j, const std::string& path, const char* count_key) {
  const Obj o(j, path, {count_key, "radius"});
  GridSpec g;
  g.points = static_cast<int>(o.integer(count_key, std::nullopt, 1));
  g.radius = o.number("radius", 0.2);
  if (!(g.radius > 0.0)) throw ConfigError(o.path("radius"), "must be positive");
  return g;
}

json matrix_json(const Matrix& a) {
  json rows = json::array();
  for (std::size_t r = 0; r < a.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < a.cols; ++c) row.push_back(a(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

bool ExperimentConfig::stochastic() const {
  const bool sampled = sampler.mode != SamplerSpec::Mode::bypass &&
                       sampler.policy.kind != CandidatePolicy::Kind::full;
  const bool noisy = sigma_obs > 0.0 && !observation;
  return search.selection.annealed || sampled || noisy;
}

ExperimentConfig parse_config(const json& j) {
  const Obj top(j, "", {"name", "model", "digits", "truth", "observation", "loss", "sampler",
                        "search", "refinement", "seed", "threads"});
  ExperimentConfig c;
  c.name = top.string("name", "");
  if (!top.has("digits")) throw ConfigError("/digits", "required field is missing");
  c.digits = parse_digits(top.at("digits"));
  const int comps = c.digits->components();
  if (!top.has("model")) throw ConfigError("/model", "required field is missing");
  c.model = parse_model(top.at("model"), comps);

  if (top.has("truth")) {
    c.truth = top.numbers("truth");
    if (c.truth->size() != static_cast<std::size_t>(comps)) {
      throw ConfigError("/truth", "need " + std::to_string(comps) + " values");
    }
  }
  if (top.has("observation")) {
    const Obj o(top.at("observation"), "/observation", {"x", "sigma"});
    if (o.has("x")) c.observation = o.numbers("x");
    c.sigma_obs = o.number("sigma", 0.0);
    if (c.sigma_obs < 0.0) throw ConfigError(o.path("sigma"), "must be >= 0");
    if (c.observation && c.sigma_obs > 0.0) {
      throw ConfigError(o.path("sigma"), "noise only applies to observations generated from the truth");
    }
  }
  if (!c.truth && !c.observation) {
    throw ConfigError("/truth", "give either a truth vector or an explicit observation");
  }

  const auto model = as_config_error("/model", [&] { return build_model(c); });
  if (c.observation && c.observation->size() != model->output_dim()) {
    throw ConfigError("/observation/x", "model produces " + std::to_string(model->output_dim()) +
                                            " outputs, observation has " +
                                            std::to_string(c.observation->size()));
  }
  if (top.has("loss")) {
    const Obj o(top.at("loss"), "/loss", {"weights", "W"});
    if (o.has("weights") && o.has("W")) throw ConfigError("/loss", "give either 'weights' or 'W'");
    if (o.has("weights")) c.weight = Matrix::diagonal(o.numbers("weights"));
    if (o.has("W")) c.weight = Obj::to_matrix(o.at("W"), o.path("W"));
    if (c.weight) {
      LossSpec probe;
      probe.observation.assign(model->output_dim(), 0.0);
      probe.weight = c.weight;
      as_config_error(o.has("W") ? "/loss/W" : "/loss/weights", [&] {
        probe.validate(model->output_dim());
        return 0;
      });
    }
  }
  if (top.has("sampler")) c.sampler = parse_sampler(top.at("sampler"));
  if (c.sampler.mode != SamplerSpec::Mode::bypass && !c.truth) {
    throw ConfigError("/sampler/mode", "synthetic Born registers need a truth vector");
  }
  if (top.has("search")) parse_search(top.at("search"), c);
  if (top.has("refinement")) {
    const Obj o(top.at("refinement"), "/refinement", {"multiscale", "fine"});
    if (o.has("multiscale")) c.refinement.multiscale = parse_grid(o.at("multiscale"), "/refinement/multiscale", "G");
    if (o.has("fine")) c.refinement.fine = parse_grid(o.at("fine"), "/refinement/fine", "F");
  }
  c.seed = top.has("seed") ? top.seed("seed") : 0;
  c.threads = static_cast<int>(top.integer("threads", kernels::default_threads(), 1));
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  if (!c.name.empty()) j["name"] = c.name;

  json model;
  switch (c.model.kind) {
    case ModelSpec::Kind::wave:
      model["kind"] = "wave";
      if (c.model.sensors == WaveModel::uniform_sensors(c.model.sensors.size())) {
        model["sensors"] = c.model.sensors.size();
      } else {
        model["sensors"] = c.model.sensors;
      }
      model["T"] = c.model.final_time;
      model["c"] = c.model.speed;
      break;
    case ModelSpec::Kind::linear:
      model["kind"] = "linear";
      model["A"] = matrix_json(c.model.a);
      break;
    case ModelSpec::Kind::deceptive:
      model["kind"] = "deceptive";
      break;
  }
  j["model"] = model;

  const auto& cfg = *c.digits;
  json digits;
  if (cfg.uniform_base()) {
    digits["base"] = cfg.base_at(0);
  } else {
    std::vector<int> bases;
    for (std::size_t s = 0; s < cfg.size(); ++s) bases.push_back(cfg.base_at(s));
    digits["bases"] = bases;
  }
  digits["n"] = cfg.n();
  digits["m"] = cfg.m();
  digits["signed"] = cfg.is_signed();
  digits["M"] = cfg.components();
  j["digits"] = digits;

  if (c.truth) j["truth"] = *c.truth;
  json obs = {{"sigma", c.sigma_obs}};
  if (c.observation) obs["x"] = *c.observation;
  j["observation"] = obs;

  if (c.weight) {
    bool diagonal = true;
    for (std::size_t r = 0; r < c.weight->rows; ++r) {
      for (std::size_t col = 0; col < c.weight->cols; ++col) {
        if (r != col && (*c.weight)(r, col) != 0.0) diagonal = false;
      }
    }
    if (diagonal) {
      std::vector<double> d;
      for (std::size_t r = 0; r < c.weight->rows; ++r) d.push_back((*c.weight)(r, r));
      j["loss"] = {{"weights", d}};
    } else {
      j["loss"] = {{"W", matrix_json(*c.weight)}};
    }
  }

  json sampler;
  const char* modes[] = {"bypass", "synthetic", "point"};
  sampler["mode"] = modes[static_cast<int>(c.sampler.mode)];
  sampler["shots"] = c.sampler.shots;
  switch (c.sampler.policy.kind) {
    case CandidatePolicy::Kind::full: sampler["policy"] = "full"; break;
    case CandidatePolicy::Kind::top_r:
      sampler["policy"] = "top_r";
      sampler["r"] = c.sampler.policy.r;
      break;
    case CandidatePolicy::Kind::threshold:
      sampler["policy"] = "threshold";
      sampler["tau"] = c.sampler.policy.tau;
      break;
  }
  if (c.sampler.eta_delta) sampler["eta_delta"] = *c.sampler.eta_delta;
  sampler["confidence"] = c.sampler.confidence;
  if (c.sampler.noise) {
    const auto& nz = *c.sampler.noise;
    json n;
    switch (nz.kind) {
      case NoiseModel::Kind::exact: n["kind"] = "exact"; break;
      case NoiseModel::Kind::independent_flip:
        n["kind"] = "independent";
        n["epsilon"] = nz.epsilon;
        break;
      case NoiseModel::Kind::correlated:
        n["kind"] = "correlated";
        n["sigma2"] = nz.sigma2;
        n["rho"] = nz.rho;
        break;
      case NoiseModel::Kind::categorical: {
        n["kind"] = "categorical";
        json pmf = json::array();
        for (const auto& [v, p] : nz.pmf) pmf.push_back({v, p});
        n["pmf"] = pmf;
        break;
      }
    }
    sampler["noise"] = n;
  }
  if (c.sampler.seed) sampler["seed"] = *c.sampler.seed;
  j["sampler"] = sampler;

  json search;
  search["beam_width"] = c.search.beam_width;
  search["backtrack"] = {{"stride", c.search.backtrack.stride}, {"depth", c.search.backtrack.depth}};
  const auto& sch = c.search.selection.schedule;
  json sel;
  sel["mode"] = c.search.selection.annealed ? "annealed" : "deterministic";
  if (sch.kind == Schedule::Kind::log) {
    sel["schedule"] = "log";
    sel["C"] = sch.c;
  } else {
    sel["schedule"] = "exponential";
    sel["T0"] = sch.t0;
    sel["decay"] = sch.decay;
  }
  search["selection"] = sel;
  search["lambda"] = c.lambda;
  if (c.omega_w0) search["omega"] = *c.omega_w0;
  if (!c.omega.empty()) search["omega"] = c.omega;
  search["init"] = c.warm_start ? "warm" : "zero";
  if (c.warm_start) search["warm_start"] = *c.warm_start;
  search["dedup"] = c.search.dedup;
  j["search"] = search;

  json refine = json::object();
  if (c.refinement.multiscale) {
    refine["multiscale"] = {{"G", c.refinement.multiscale->points},
                            {"radius", c.refinement.multiscale->radius}};
  }
  if (c.refinement.fine) {
    refine["fine"] = {{"F", c.refinement.fine->points}, {"radius", c.refinement.fine->radius}};
  }
  j["refinement"] = refine;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

std::vector<std::string> preset_names() { return {"wave-full", "wave-beam2", "linear-convex"}; }

json preset_json(const std::string& name) {
  if (name == "wave-full") {
    return json::parse(R"({
      "name": "wave-full",
      "model": {"kind": "wave", "sensors": 50, "T": 1.0, "c": 1.0},
      "digits": {"base": 4, "n": 8, "m": 8, "signed": false, "M": 3},
      "truth": [0.25, 0.5, 0.75],
      "search": {
        "beam_width": 4,
        "backtrack": {"stride": 2, "depth": 1},
        "selection": {"mode": "annealed", "schedule": "exponential", "T0": 1.0, "decay": 0.85}
      },
      "refinement": {"multiscale": {"G": 301, "radius": 0.2}, "fine": {"F": 6000, "radius": 0.2}},
      "seed": 1
    })");
  }
  if (name == "wave-beam2") {
    return json::parse(R"({
      "name": "wave-beam2",
      "model": {"kind": "wave", "sensors": 50, "T": 1.0, "c": 1.0},
      "digits": {"base": 2, "n": 7, "m": 7, "signed": false, "M": 3},
      "truth": [0.25, 0.5, 0.75],
      "search": {"beam_width": 2},
      "seed": 1
    })");
  }
  if (name == "linear-convex") {
    return json::parse(R"({
      "name": "linear-convex",
      "model": {"kind": "linear", "A": [[1.5, 0.0], [0.0, 0.75]]},
      "digits": {"base": 3, "n": 1, "m": 3, "signed": true, "M": 2},
      "truth": [1.3, -2.6],
      "search": {"beam_width": 1},
      "seed": 1
    })");
  }
  throw ConfigError("", "unknown preset '" + name + "' (wave-full, wave-beam2, linear-convex)");
}

ExperimentConfig preset(const std::string& name) { return parse_config(preset_json(name)); }

ForwardModelPtr build_model(const ExperimentConfig& c) {
  const int comps = c.digits->components();
  switch (c.model.kind) {
    case ModelSpec::Kind::wave:
      return std::make_shared<const WaveModel>(comps, c.model.sensors, c.model.final_time,
                                               c.model.speed);
    case ModelSpec::Kind::linear:
      return std::make_shared<const LinearModel>(c.model.a);
    case ModelSpec::Kind::deceptive:
      return make_deceptive_model();
  }
  throw ContractError("unknown model kind");
}

RunArtifacts run_experiment(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto model = build_model(c);
  const auto& cfg = c.digits;

  RunArtifacts a;
  if (c.observation) {
    a.observation = *c.observation;
  } else {
    a.observation = model->eval(*c.truth);
    if (c.sigma_obs > 0.0) {
      Rng rng(derive_seed(c.seed, kObservationSeed));
      std::normal_distribution<double> noise(0.0, c.sigma_obs);
      for (double& x : a.observation) x += noise(rng);
    }
  }
  model->reset_calls();

  LossSpec spec;
  spec.observation = a.observation;
  spec.weight = c.weight;
  spec.lambda = c.lambda;
  if (c.omega_w0) spec.omega = LossSpec::geometric_omega(*cfg, *c.omega_w0);
  if (!c.omega.empty()) spec.omega = c.omega;

  SearchConfig search = c.search;
  search.threads = c.threads;
  search.selection.seed = derive_seed(c.seed, kAnnealSeed);
  if (c.warm_start) {
    const auto v = project(*c.warm_start, cfg);
    search.warm_start = std::vector<int>(v.digits().begin(), v.digits().end());
  }

  HybridConfig hybrid;
  hybrid.shots = c.sampler.shots;
  hybrid.policy = c.sampler.policy;
  hybrid.eta_delta = c.sampler.eta_delta;
  hybrid.seed = c.sampler.seed.value_or(derive_seed(c.seed, kSamplerSeed));
  if (c.sampler.mode != SamplerSpec::Mode::bypass) {
    // emulated registers are peaked at the projected truth; the search itself
    // only ever sees the candidate sets extracted from their samples
    const auto target = project(*c.truth, cfg);
    hybrid.born = c.sampler.mode == SamplerSpec::Mode::point ? point_mass_born(target)
                                                             : synthetic_born(target, c.sampler.confidence);
  } else {
    hybrid.policy = CandidatePolicy::full();
  }

  a.search = hybrid_segment(*model, spec, cfg, hybrid, search);
  const auto& run = a.search.run;
  a.trace = run.trace;
  a.theta = run.theta;
  a.error = run.error;
  a.logical_calls = run.raw_calls;
  a.stages.push_back({"segmentation", a.theta, a.error});

  std::uint64_t step = a.trace.size();
  auto absorb = [&](const RefineResult& r, TraceRow::Phase phase, const char* name) {
    for (const auto& s : r.steps) {
      a.trace.push_back({step++, phase, 0, s.component, s.index, s.error, a.logical_calls + s.calls});
    }
    a.logical_calls += r.calls;
    a.diagnostic_calls += r.diagnostic_calls;
    a.theta = r.theta;
    a.error = r.error;
    a.stages.push_back({name, a.theta, a.error});
  };
  if (c.refinement.multiscale) {
    absorb(multiscale_refine(*model, spec, a.theta, a.error, *c.refinement.multiscale, c.threads),
           TraceRow::Phase::multiscale, "multiscale");
  }
  if (c.refinement.fine) {
    absorb(fine_tune(*model, spec, a.theta, a.error, *c.refinement.fine, c.threads),
           TraceRow::Phase::fine, "fine");
  }

  a.predicted_calls = call_count_prediction(*cfg, a.search.candidates, search, c.refinement);
  a.forward_calls = model->calls();
  if (c.truth) {
    std::vector<double> err(a.theta.size());
    for (std::size_t k = 0; k < err.size(); ++k) err[k] = std::abs(a.theta[k] - (*c.truth)[k]);
    a.abs_error = err;
  }
  a.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return a;
}

json report_json(const ExperimentConfig& c, const RunArtifacts& a) {
  const auto& cfg = *c.digits;
  const auto& run = a.search.run;
  json r;
  r["format"] = "segreg-report/1";
  r["name"] = c.name;
  r["model"] = build_model(c)->name();
  if (c.stochastic()) r["seed"] = c.seed;
  r["theta"] = a.theta;
  r["error"] = a.error;
  r["segmentation_loss"] = run.loss;

  json digits = json::array();
  const auto d = static_cast<std::size_t>(cfg.depth());
  for (int k = 0; k < cfg.components(); ++k) {
    const auto first = run.digits.begin() + static_cast<std::ptrdiff_t>(k * d);
    digits.push_back(std::vector<int>(first, first + static_cast<std::ptrdiff_t>(d)));
  }
  r["digits"] = digits;

  if (c.truth) {
    r["truth"] = *c.truth;
    r["abs_error"] = *a.abs_error;
    r["max_abs_error"] = *std::max_element(a.abs_error->begin(), a.abs_error->end());
  }

  json stages = json::array();
  for (const auto& s : a.stages) stages.push_back({{"name", s.name}, {"theta", s.theta}, {"error", s.error}});
  r["stages"] = stages;

  r["calls"] = {{"predicted", a.predicted_calls},
                {"logical", a.logical_calls},
                {"forward", a.forward_calls},
                {"diagnostic", a.diagnostic_calls},
                {"saved_by_cache", run.raw_calls - run.model_calls}};
  r["trace_rows"] = a.trace.size();

  json survivors = json::array();
  for (const auto& layer : run.survivors) {
    json l = json::array();
    for (const auto& s : layer) l.push_back({{"digits", s.digits}, {"loss", s.loss}});
    survivors.push_back(l);
  }
  r["survivors"] = survivors;

  if (a.search.sampled) {
    std::vector<std::size_t> sizes;
    for (const auto& cs : a.search.candidates) sizes.push_back(cs.size());
    std::vector<bool> flagged = a.search.flagged;
    r["sampler"] = {{"shots_used", a.search.shots_used},
                    {"entropy", a.search.entropy},
                    {"flagged", flagged},
                    {"candidate_sizes", sizes}};
  }
  if (c.sampler.noise) {
    std::vector<double> mse;
    for (int k = 0; k < cfg.components(); ++k) mse.push_back(predict_mse(*c.sampler.noise, cfg, k));
    r["noise"] = {{"predicted_mse", mse}};
  }
  if (c.model.kind == ModelSpec::Kind::wave && c.truth) {
    constexpr int kSamples = 101;
    std::vector<double> xs, truth_u, rec_u, err;
    for (int s = 0; s < kSamples; ++s) {
      const double x = static_cast<double>(s) / (kSamples - 1);
      xs.push_back(x);
      truth_u.push_back(WaveModel::initial_displacement(*c.truth, x));
      rec_u.push_back(WaveModel::initial_displacement(a.theta, x));
      err.push_back(std::abs(truth_u.back() - rec_u.back()));
    }
    r["u0"] = {{"x", xs}, {"true", truth_u}, {"recovered", rec_u}, {"abs_error", err}};
  }
  return r;
}

void write_trace_csv(std::ostream& os, const RunArtifacts& a) {
  os << "step,layer,component,digit,loss,calls\n";
  char loss[64];
  for (const auto& t : a.trace) {
    std::snprintf(loss, sizeof loss, "%.17g", t.loss);
    os << t.step << ',';
    if (t.phase == TraceRow::Phase::sweep || t.phase == TraceRow::Phase::backtrack) {
      os << t.layer;
    } else {
      os << to_string(t.phase);
    }
    os << ',' << t.component << ',' << t.digit << ',' << loss << ',' << t.calls << '\n';
  }
}

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

}  // namespace segreg
