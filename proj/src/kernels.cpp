#include "segreg/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "segreg/error.hpp"

namespace segreg::kernels {

namespace {

// Exceptions must not cross an OpenMP region boundary; keep the first one.
class ExceptionSlot {
 public:
  template <typename Fn>
  void run(Fn&& fn) noexcept {
    try {
      fn();
    } catch (...) {
#pragma omp critical(segreg_exception_slot)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

Evaluation evaluate_one(const ForwardModel& model, const LossSpec& spec, const DigitConfig& cfg,
                        std::span<const int> digits, std::vector<double>& theta,
                        std::vector<double>& out) {
  for (int k = 0; k < cfg.components(); ++k) theta[k] = decode_component(cfg, digits, k);
  model.eval_into(theta, out);
  Evaluation e;
  e.error = weighted_error(spec, out);
  e.loss = spec.lambda == 0.0 ? e.error : e.error + spec.lambda * regularizer(spec, digits);
  return e;
}

void check_strings(const DigitConfig& cfg, std::span<const int> strings,
                   std::span<Evaluation> out) {
  if (strings.size() != out.size() * cfg.size()) {
    throw ContractError("evaluate_digits: buffer sizes disagree");
  }
}

}  // namespace

void evaluate_digits_serial(const ForwardModel& model, const LossSpec& spec,
                            const DigitConfig& cfg, std::span<const int> strings,
                            std::span<Evaluation> out) {
  check_strings(cfg, strings, out);
  const std::size_t stride = cfg.size();
  std::vector<double> theta(static_cast<std::size_t>(cfg.components()));
  std::vector<double> z(model.output_dim());
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = evaluate_one(model, spec, cfg, strings.subspan(c * stride, stride), theta, z);
  }
}

void evaluate_digits_parallel(const ForwardModel& model, const LossSpec& spec,
                              const DigitConfig& cfg, std::span<const int> strings,
                              std::span<Evaluation> out, int threads) {
  check_strings(cfg, strings, out);
  const std::size_t stride = cfg.size();
  const auto count = static_cast<std::int64_t>(out.size());
  ExceptionSlot slot;
#pragma omp parallel num_threads(std::max(threads, 1))
  {
    std::vector<double> theta(static_cast<std::size_t>(cfg.components()));
    std::vector<double> z(model.output_dim());
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < count; ++c) {
      slot.run([&] {
        const auto idx = static_cast<std::size_t>(c);
        out[idx] = evaluate_one(model, spec, cfg, strings.subspan(idx * stride, stride), theta, z);
      });
    }
  }
  slot.rethrow();
}

void evaluate_digits(const ForwardModel& model, const LossSpec& spec, const DigitConfig& cfg,
                     std::span<const int> strings, std::span<Evaluation> out, int threads) {
  if (threads <= 1 || out.size() < 2) {
    evaluate_digits_serial(model, spec, cfg, strings, out);
  } else {
    evaluate_digits_parallel(model, spec, cfg, strings, out, threads);
  }
}

void sweep_component_serial(const ForwardModel& model, const LossSpec& spec,
                            std::span<const double> theta, int k, std::span<const double> values,
                            std::span<double> errors) {
  if (values.size() != errors.size()) throw ContractError("sweep: buffer sizes disagree");
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> z(model.output_dim());
  for (std::size_t g = 0; g < values.size(); ++g) {
    point[k] = values[g];
    model.eval_into(point, z);
    errors[g] = weighted_error(spec, z);
  }
}

void sweep_component_parallel(const ForwardModel& model, const LossSpec& spec,
                              std::span<const double> theta, int k,
                              std::span<const double> values, std::span<double> errors,
                              int threads) {
  if (values.size() != errors.size()) throw ContractError("sweep: buffer sizes disagree");
  const auto count = static_cast<std::int64_t>(values.size());
  ExceptionSlot slot;
#pragma omp parallel num_threads(std::max(threads, 1))
  {
    std::vector<double> point(theta.begin(), theta.end());
    std::vector<double> z(model.output_dim());
#pragma omp for schedule(static)
    for (std::int64_t g = 0; g < count; ++g) {
      slot.run([&] {
        const auto idx = static_cast<std::size_t>(g);
        point[k] = values[idx];
        model.eval_into(point, z);
        errors[idx] = weighted_error(spec, z);
      });
    }
  }
  slot.rethrow();
}

void sweep_component(const ForwardModel& model, const LossSpec& spec,
                     std::span<const double> theta, int k, std::span<const double> values,
                     std::span<double> errors, int threads) {
  if (threads <= 1 || values.size() < 2) {
    sweep_component_serial(model, spec, theta, k, values, errors);
  } else {
    sweep_component_parallel(model, spec, theta, k, values, errors, threads);
  }
}

namespace {

std::uint64_t chunk_count(std::uint64_t trials, std::uint64_t chunk) {
  if (chunk == 0) throw ContractError("accumulate_chunks: chunk size must be positive");
  return (trials + chunk - 1) / chunk;
}

std::uint64_t chunk_size(std::uint64_t trials, std::uint64_t chunk, std::uint64_t c) {
  return std::min(chunk, trials - c * chunk);
}

Moments combine(const std::vector<Moments>& parts) {
  Moments total;
  for (const auto& p : parts) {
    total.sum += p.sum;
    total.sum_sq += p.sum_sq;
    total.count += p.count;
  }
  return total;
}

}  // namespace

Moments accumulate_chunks_serial(std::uint64_t trials, std::uint64_t chunk,
                                 const ChunkFn& chunk_fn) {
  const auto chunks = chunk_count(trials, chunk);
  std::vector<Moments> parts(chunks);
  for (std::uint64_t c = 0; c < chunks; ++c) parts[c] = chunk_fn(c, chunk_size(trials, chunk, c));
  return combine(parts);
}

Moments accumulate_chunks_parallel(std::uint64_t trials, std::uint64_t chunk,
                                   const ChunkFn& chunk_fn, int threads) {
  const auto chunks = chunk_count(trials, chunk);
  std::vector<Moments> parts(chunks);
  ExceptionSlot slot;
  const auto count = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(threads, 1))
  for (std::int64_t c = 0; c < count; ++c) {
    slot.run([&] {
      const auto idx = static_cast<std::uint64_t>(c);
      parts[idx] = chunk_fn(idx, chunk_size(trials, chunk, idx));
    });
  }
  slot.rethrow();
  return combine(parts);
}

Moments accumulate_chunks(std::uint64_t trials, std::uint64_t chunk, const ChunkFn& chunk_fn,
                          int threads) {
  if (threads <= 1) return accumulate_chunks_serial(trials, chunk, chunk_fn);
  return accumulate_chunks_parallel(trials, chunk, chunk_fn, threads);
}

int default_threads() {
  if (const char* env = std::getenv("SEGREG_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

}  // namespace segreg::kernels
