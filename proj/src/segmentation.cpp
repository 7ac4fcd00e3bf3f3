#include "segreg/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "segreg/error.hpp"
#include "segreg/kernels.hpp"

namespace segreg {

double Schedule::temperature(int step) const {
  if (step < 1) throw ContractError("schedule: layer steps start at 1");
  if (kind == Kind::log) return c / std::log1p(static_cast<double>(step));
  return t0 * std::pow(decay, step - 1);
}

void Schedule::validate() const {
  if (kind == Kind::log) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ContractError("schedule: C must be positive");
  } else {
    if (!(t0 > 0.0) || !std::isfinite(t0)) throw ContractError("schedule: T0 must be positive");
    if (!(decay > 0.0 && decay <= 1.0)) throw ContractError("schedule: decay must lie in (0, 1]");
  }
}

void SearchConfig::validate() const {
  if (beam_width < 1) throw ContractError("search: beam width must be >= 1");
  if (backtrack.stride < 0 || backtrack.depth < 0) {
    throw ContractError("search: backtrack stride and depth must be >= 0");
  }
  if (threads < 1) throw ContractError("search: threads must be >= 1");
  if (selection.annealed) selection.schedule.validate();
}

std::string to_string(TraceRow::Phase phase) {
  switch (phase) {
    case TraceRow::Phase::sweep: return "sweep";
    case TraceRow::Phase::backtrack: return "backtrack";
    case TraceRow::Phase::multiscale: return "ms";
    case TraceRow::Phase::fine: return "fine";
  }
  return "?";
}

std::vector<double> softmax_probabilities(std::span<const double> losses, double temperature) {
  if (losses.empty()) throw ContractError("softmax: no candidates");
  if (!(temperature > 0.0)) throw ContractError("softmax: temperature must be positive");
  double lo = std::numeric_limits<double>::infinity();
  for (double l : losses) {
    if (std::isnan(l)) throw ContractError("softmax: NaN loss");
    lo = std::min(lo, l);
  }
  if (!std::isfinite(lo)) throw ContractError("softmax: every loss is infinite");
  std::vector<double> p(losses.size());
  double z = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = std::exp(-(losses[j] - lo) / temperature);
    z += p[j];
  }
  for (double& v : p) v /= z;
  return p;
}

std::size_t annealed_select(std::span<const double> losses, double temperature, Rng& rng) {
  const auto p = softmax_probabilities(losses, temperature);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    acc += p[j];
    if (u < acc) return j;
  }
  // rounding left u above the last partial sum: take the last candidate with mass
  for (std::size_t j = p.size(); j-- > 0;) {
    if (p[j] > 0.0) return j;
  }
  return 0;
}

namespace {

constexpr std::uint64_t kAnnealStream = 0xa11ea1;

void check_inputs(const ForwardModel& model, const LossSpec& spec, const DigitConfig& cfg,
                  const CandidateSets& candidates, const SearchConfig& search) {
  search.validate();
  if (model.input_dim() != static_cast<std::size_t>(cfg.components())) {
    throw ContractError("search: model takes " + std::to_string(model.input_dim()) +
                        " parameters, lattice has " + std::to_string(cfg.components()) +
                        " components");
  }
  spec.validate(model.output_dim(), &cfg);
  if (candidates.size() != cfg.size()) {
    throw ContractError("search: need one candidate set per digit position");
  }
  const auto d = static_cast<std::size_t>(cfg.depth());
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    const auto where = "component " + std::to_string(s / d) + ", position " +
                       std::to_string(cfg.position(static_cast<int>(s % d)));
    if (candidates[s].empty()) throw ContractError("search: empty candidate set at " + where);
    for (int j : candidates[s]) {
      if (j < cfg.min_digit_at(s) || j > cfg.max_digit_at(s)) {
        throw InvalidDigitError("search: candidate " + std::to_string(j) + " outside alphabet at " +
                                where);
      }
    }
  }
  if (search.warm_start) check_digits(cfg, *search.warm_start);
}

std::vector<int> initial_digits(const DigitConfig& cfg, const SearchConfig& search) {
  if (search.warm_start) return *search.warm_start;
  return std::vector<int>(cfg.size(), 0);
}

[[noreturn]] void non_finite(int k, int i, int j, double value) {
  throw ModelError("non-finite loss " + std::to_string(value) + " at component " +
                   std::to_string(k) + ", position " + std::to_string(i) + ", digit " +
                   std::to_string(j));
}

// Layers re-swept at the checkpoint after `completed` layers, as [first, last).
std::pair<int, int> backtrack_window(const Backtrack& bt, int completed) {
  if (!bt.enabled() || completed % bt.stride != 0) return {0, 0};
  const int span = std::min(bt.depth, completed - 1);
  const int just_placed = completed - 1;
  return {just_placed - span, just_placed};
}

// ---------------------------------------------------------------- greedy

struct GreedyState {
  std::vector<int> digits;
  double loss = std::numeric_limits<double>::infinity();
  double error = std::numeric_limits<double>::infinity();
};

// argmin (or annealed draw) over C at one slot; returns the chosen candidate index
std::size_t greedy_decide(const ForwardModel& model, const LossSpec& spec, const DigitConfig& cfg,
                          const std::vector<int>& cands, int k, int i, GreedyState& st,
                          const Schedule* schedule, int step, Rng& rng, RunReport& report) {
  const auto s = cfg.slot(k, i);
  std::vector<double> losses(cands.size());
  std::vector<double> errors(cands.size());
  std::vector<int> trial = st.digits;
  for (std::size_t c = 0; c < cands.size(); ++c) {
    trial[s] = cands[c];
    errors[c] = error(spec, model, cfg, trial);
    losses[c] = spec.lambda == 0.0 ? errors[c] : errors[c] + spec.lambda * regularizer(spec, trial);
    if (!std::isfinite(losses[c])) non_finite(k, i, cands[c], losses[c]);
  }
  report.raw_calls += cands.size();
  report.model_calls += cands.size();

  std::size_t pick = 0;
  if (schedule != nullptr) {
    pick = annealed_select(losses, schedule->temperature(step), rng);
  } else {
    // candidates are ascending, so the first minimum is the smallest digit
    for (std::size_t c = 1; c < cands.size(); ++c) {
      if (losses[c] < losses[pick]) pick = c;
    }
  }
  st.digits[s] = cands[pick];
  st.loss = losses[pick];
  st.error = errors[pick];
  return pick;
}

// ---------------------------------------------------------------- beam

struct Slot {
  std::vector<int> digits;
  double loss = std::numeric_limits<double>::infinity();
  double error = std::numeric_limits<double>::infinity();
};

bool better(const Slot& a, const Slot& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  return a.digits < b.digits;
}

// Scores digit strings, caching by string within one layer when dedup is on.
class Evaluator {
 public:
  Evaluator(const ForwardModel& model, const LossSpec& spec, const DigitConfig& cfg,
            const SearchConfig& search, RunReport& report)
      : model_(model), spec_(spec), cfg_(cfg), search_(search), report_(report) {}

  void new_layer() { cache_.clear(); }

  std::vector<kernels::Evaluation> evaluate(const std::vector<std::vector<int>>& strings) {
    report_.raw_calls += strings.size();
    std::vector<kernels::Evaluation> out(strings.size());
    std::vector<std::size_t> todo;  // indices into strings needing a forward call
    std::map<std::vector<int>, std::size_t> pending;
    std::vector<std::size_t> alias(strings.size(), kNone);
    for (std::size_t t = 0; t < strings.size(); ++t) {
      if (!search_.dedup) {
        todo.push_back(t);
        continue;
      }
      if (auto hit = cache_.find(strings[t]); hit != cache_.end()) {
        out[t] = hit->second;
      } else if (auto p = pending.find(strings[t]); p != pending.end()) {
        alias[t] = p->second;
      } else {
        pending.emplace(strings[t], t);
        todo.push_back(t);
      }
    }

    const std::size_t stride = cfg_.size();
    std::vector<int> flat(todo.size() * stride);
    for (std::size_t u = 0; u < todo.size(); ++u) {
      std::copy(strings[todo[u]].begin(), strings[todo[u]].end(),
                flat.begin() + static_cast<std::ptrdiff_t>(u * stride));
    }
    std::vector<kernels::Evaluation> fresh(todo.size());
    kernels::evaluate_digits(model_, spec_, cfg_, flat, fresh, search_.threads);
    report_.model_calls += todo.size();

    for (std::size_t u = 0; u < todo.size(); ++u) {
      out[todo[u]] = fresh[u];
      if (search_.dedup) cache_.emplace(strings[todo[u]], fresh[u]);
    }
    for (std::size_t t = 0; t < strings.size(); ++t) {
      if (alias[t] != kNone) out[t] = out[alias[t]];
    }
    return out;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  const ForwardModel& model_;
  const LossSpec& spec_;
  const DigitConfig& cfg_;
  const SearchConfig& search_;
  RunReport& report_;
  std::map<std::vector<int>, kernels::Evaluation> cache_;
};

void record_survivors(RunReport& report, const std::vector<Slot>& beam) {
  std::vector<Survivor> snap;
  snap.reserve(beam.size());
  for (const auto& s : beam) snap.push_back({s.digits, s.loss});
  report.survivors.push_back(std::move(snap));
}

std::size_t best_slot(const std::vector<Slot>& beam) {
  std::size_t b = 0;
  for (std::size_t t = 1; t < beam.size(); ++t) {
    if (better(beam[t], beam[b])) b = t;
  }
  return b;
}

// Expands every slot at one digit position and prunes back to w slots.
void beam_step(Evaluator& eval, const DigitConfig& cfg, const std::vector<int>& cands, int k,
               int i, std::vector<Slot>& beam, const SearchConfig& search, int step, Rng& rng) {
  const auto s = cfg.slot(k, i);
  std::vector<std::vector<int>> gen;
  gen.reserve(beam.size() * cands.size());
  for (const auto& slot : beam) {
    for (int j : cands) {
      gen.push_back(slot.digits);
      gen.back()[s] = j;
    }
  }
  const auto evals = eval.evaluate(gen);
  for (std::size_t t = 0; t < gen.size(); ++t) {
    if (!std::isfinite(evals[t].loss)) non_finite(k, i, gen[t][s], evals[t].loss);
  }

  // distinct strings in first-generation order
  std::vector<Slot> uniq;
  {
    std::map<std::vector<int>, bool> seen;
    for (std::size_t t = 0; t < gen.size(); ++t) {
      if (seen.emplace(gen[t], true).second) uniq.push_back({gen[t], evals[t].loss, evals[t].error});
    }
  }
  std::vector<std::size_t> ranked(uniq.size());
  std::iota(ranked.begin(), ranked.end(), 0);
  std::sort(ranked.begin(), ranked.end(),
            [&](std::size_t a, std::size_t b) { return better(uniq[a], uniq[b]); });

  const auto w = static_cast<std::size_t>(search.beam_width);
  std::vector<Slot> next;
  if (!search.selection.annealed) {
    for (std::size_t t = 0; t < std::min(w, ranked.size()); ++t) next.push_back(uniq[ranked[t]]);
  } else {
    // w - 1 elites, then one survivor drawn from the rest in generation order
    const std::size_t elites = std::min(w - 1, ranked.size());
    std::vector<bool> taken(uniq.size(), false);
    for (std::size_t t = 0; t < elites; ++t) {
      next.push_back(uniq[ranked[t]]);
      taken[ranked[t]] = true;
    }
    std::vector<std::size_t> rest;
    std::vector<double> rest_loss;
    for (std::size_t u = 0; u < uniq.size(); ++u) {
      if (!taken[u]) {
        rest.push_back(u);
        rest_loss.push_back(uniq[u].loss);
      }
    }
    if (!rest.empty()) {
      const auto pick = annealed_select(rest_loss, search.selection.schedule.temperature(step), rng);
      next.push_back(uniq[rest[pick]]);
    }
  }
  // fewer distinct strings than slots: repeat the survivors cyclically
  const std::size_t have = next.size();
  for (std::size_t t = have; t < w; ++t) next.push_back(next[t % have]);
  beam = std::move(next);
}

// Re-sweeps one earlier digit position in every slot with the argmin rule.
void backtrack_step(Evaluator& eval, const DigitConfig& cfg, const std::vector<int>& cands, int k,
                    int i, std::vector<Slot>& beam) {
  const auto s = cfg.slot(k, i);
  std::vector<std::vector<int>> gen;
  gen.reserve(beam.size() * cands.size());
  for (const auto& slot : beam) {
    for (int j : cands) {
      gen.push_back(slot.digits);
      gen.back()[s] = j;
    }
  }
  const auto evals = eval.evaluate(gen);
  for (std::size_t b = 0; b < beam.size(); ++b) {
    const std::size_t base = b * cands.size();
    std::size_t pick = base;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const auto& e = evals[base + c];
      if (!std::isfinite(e.loss)) non_finite(k, i, cands[c], e.loss);
      if (e.loss < evals[pick].loss) pick = base + c;
    }
    beam[b].digits[s] = gen[pick][s];
    beam[b].loss = evals[pick].loss;
    beam[b].error = evals[pick].error;
  }
}

}  // namespace

RunReport greedy_segment(const ForwardModel& model, const LossSpec& spec,
                         const DigitConfigPtr& cfg_ptr, const CandidateSets& candidates,
                         const SearchConfig& search) {
  const DigitConfig& cfg = *cfg_ptr;
  check_inputs(model, spec, cfg, candidates, search);
  if (search.beam_width != 1) throw ContractError("greedy: beam width must be 1");

  RunReport report;
  GreedyState st;
  st.digits = initial_digits(cfg, search);
  Rng rng(derive_seed(search.selection.seed, kAnnealStream));
  const Schedule* schedule = search.selection.annealed ? &search.selection.schedule : nullptr;
  std::uint64_t step = 0;

  for (int p = 0; p < cfg.depth(); ++p) {
    const int i = cfg.position(p);
    for (int k = 0; k < cfg.components(); ++k) {
      const auto& cands = candidates[cfg.slot(k, i)];
      const auto pick = greedy_decide(model, spec, cfg, cands, k, i, st, schedule, p + 1, rng, report);
      report.trace.push_back({step++, TraceRow::Phase::sweep, i, k, cands[pick], st.loss,
                              report.raw_calls});
    }
    const auto [first, last] = backtrack_window(search.backtrack, p + 1);
    for (int q = first; q < last; ++q) {
      const int iq = cfg.position(q);
      for (int k = 0; k < cfg.components(); ++k) {
        const auto& cands = candidates[cfg.slot(k, iq)];
        const auto pick = greedy_decide(model, spec, cfg, cands, k, iq, st, nullptr, p + 1, rng, report);
        report.trace.push_back({step++, TraceRow::Phase::backtrack, iq, k, cands[pick], st.loss,
                                report.raw_calls});
      }
    }
    report.survivors.push_back({{st.digits, st.loss}});
  }

  report.digits = st.digits;
  report.theta = decode(cfg, st.digits);
  report.loss = st.loss;
  report.error = st.error;
  return report;
}

RunReport beam_segment(const ForwardModel& model, const LossSpec& spec,
                       const DigitConfigPtr& cfg_ptr, const CandidateSets& candidates,
                       const SearchConfig& search) {
  const DigitConfig& cfg = *cfg_ptr;
  check_inputs(model, spec, cfg, candidates, search);

  RunReport report;
  Evaluator eval(model, spec, cfg, search, report);
  std::vector<Slot> beam(static_cast<std::size_t>(search.beam_width),
                         Slot{initial_digits(cfg, search)});
  Rng rng(derive_seed(search.selection.seed, kAnnealStream));
  std::uint64_t step = 0;

  for (int p = 0; p < cfg.depth(); ++p) {
    const int i = cfg.position(p);
    eval.new_layer();
    for (int k = 0; k < cfg.components(); ++k) {
      const auto s = cfg.slot(k, i);
      beam_step(eval, cfg, candidates[s], k, i, beam, search, p + 1, rng);
      report.trace.push_back({step++, TraceRow::Phase::sweep, i, k, beam.front().digits[s],
                              beam.front().loss, report.raw_calls});
    }
    const auto [first, last] = backtrack_window(search.backtrack, p + 1);
    for (int q = first; q < last; ++q) {
      const int iq = cfg.position(q);
      for (int k = 0; k < cfg.components(); ++k) {
        const auto s = cfg.slot(k, iq);
        backtrack_step(eval, cfg, candidates[s], k, iq, beam);
        const auto& best = beam[best_slot(beam)];
        report.trace.push_back({step++, TraceRow::Phase::backtrack, iq, k, best.digits[s],
                                best.loss, report.raw_calls});
      }
    }
    if (last > first) std::stable_sort(beam.begin(), beam.end(), better);
    record_survivors(report, beam);
  }

  const auto& best = beam[best_slot(beam)];
  report.digits = best.digits;
  report.theta = decode(cfg, best.digits);
  report.loss = best.loss;
  report.error = best.error;
  return report;
}

HybridReport hybrid_segment(const ForwardModel& model, const LossSpec& spec,
                            const DigitConfigPtr& cfg, const HybridConfig& hybrid,
                            const SearchConfig& search) {
  HybridReport out;
  if (hybrid.policy.kind == CandidatePolicy::Kind::full) {
    out.candidates = full_candidates(*cfg);
    out.run = beam_segment(model, spec, cfg, out.candidates, search);
    return out;
  }
  if (hybrid.born.size() != cfg->size()) {
    throw ContractError("hybrid: need one Born distribution per digit position");
  }
  for (std::size_t s = 0; s < cfg->size(); ++s) {
    const auto& reg = hybrid.born[s];
    if (reg.min_digit != cfg->min_digit_at(s) || reg.max_digit() != cfg->max_digit_at(s)) {
      throw ContractError("hybrid: Born register " + std::to_string(s) +
                          " does not cover the digit alphabet");
    }
  }

  out.sampled = true;
  auto empirical = sample_all(hybrid.born, hybrid.shots, derive_seed(hybrid.seed, 1), search.threads);
  out.shots_used = hybrid.shots * empirical.size();
  if (hybrid.eta_delta) {
    auto hook = entropy_refine_hook(hybrid.born, std::move(empirical), hybrid.policy,
                                    *hybrid.eta_delta, derive_seed(hybrid.seed, 2));
    out.entropy = std::move(hook.entropy);
    out.flagged = std::move(hook.flagged);
    out.shots_used += hook.resampled_shots;
    out.candidates = std::move(hook.candidates);
  } else {
    for (const auto& f : empirical) out.entropy.push_back(entropy(f));
    out.flagged.assign(empirical.size(), false);
    out.candidates = candidates(empirical, hybrid.policy);
  }
  out.run = beam_segment(model, spec, cfg, out.candidates, search);
  return out;
}

std::uint64_t call_count_prediction(const DigitConfig& cfg, const CandidateSets& candidates,
                                    const SearchConfig& search, const RefinementConfig& refine) {
  if (candidates.size() != cfg.size()) throw ContractError("accounting: candidate sets mismatch");
  const auto w = static_cast<std::uint64_t>(search.beam_width);
  auto layer_cost = [&](int p) {
    std::uint64_t c = 0;
    for (int k = 0; k < cfg.components(); ++k) c += candidates[cfg.slot(k, cfg.position(p))].size();
    return c * w;
  };
  std::uint64_t total = 0;
  for (int p = 0; p < cfg.depth(); ++p) {
    total += layer_cost(p);
    const auto [first, last] = backtrack_window(search.backtrack, p + 1);
    for (int q = first; q < last; ++q) total += layer_cost(q);
  }
  const auto m = static_cast<std::uint64_t>(cfg.components());
  if (refine.multiscale) total += m * static_cast<std::uint64_t>(refine.multiscale->points);
  if (refine.fine) total += m * static_cast<std::uint64_t>(refine.fine->points);
  return total;
}

std::uint64_t call_count_formula(int components, int depth, int r, int w, int stride, int depth_bt,
                                 int g, int f) {
  const auto m = static_cast<std::uint64_t>(components);
  const auto d = static_cast<std::uint64_t>(depth);
  const auto rr = static_cast<std::uint64_t>(r);
  const auto ww = static_cast<std::uint64_t>(w);
  const std::uint64_t b = stride > 0 && depth_bt > 0 ? d / static_cast<std::uint64_t>(stride) : 0;
  return rr * m * d * ww + b * m * static_cast<std::uint64_t>(depth_bt) * rr * ww +
         m * static_cast<std::uint64_t>(g) + m * static_cast<std::uint64_t>(f);
}

}  // namespace segreg
