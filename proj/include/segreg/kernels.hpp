#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "segreg/digit_lattice.hpp"
#include "segreg/forward_models.hpp"

// Data-parallel inner loops of the solver. Each kernel has a plain serial
// reference and an OpenMP version; both write results by index and reduce in
// a fixed order, so their outputs are bitwise identical for any thread count.
namespace segreg::kernels {

struct Evaluation {
  double loss = 0.0;   // E + lambda R
  double error = 0.0;  // E
};

/// Evaluates the loss of `count` flat digit strings laid out back to back
/// (stride cfg.size()). One forward call per string.
void evaluate_digits_serial(const ForwardModel& model, const LossSpec& spec,
                            const DigitConfig& cfg, std::span<const int> strings,
                            std::span<Evaluation> out);
void evaluate_digits_parallel(const ForwardModel& model, const LossSpec& spec,
                              const DigitConfig& cfg, std::span<const int> strings,
                              std::span<Evaluation> out, int threads);
void evaluate_digits(const ForwardModel& model, const LossSpec& spec, const DigitConfig& cfg,
                     std::span<const int> strings, std::span<Evaluation> out, int threads);

/// E(theta with theta_k := values[g]) for every g. One forward call per value.
void sweep_component_serial(const ForwardModel& model, const LossSpec& spec,
                            std::span<const double> theta, int k, std::span<const double> values,
                            std::span<double> errors);
void sweep_component_parallel(const ForwardModel& model, const LossSpec& spec,
                              std::span<const double> theta, int k,
                              std::span<const double> values, std::span<double> errors,
                              int threads);
void sweep_component(const ForwardModel& model, const LossSpec& spec,
                     std::span<const double> theta, int k, std::span<const double> values,
                     std::span<double> errors, int threads);

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t count = 0;
};

/// Runs `chunk_fn(chunk_index, chunk_size)` over trials split into fixed-size
/// chunks and adds up the partial moments in chunk order.
using ChunkFn = std::function<Moments(std::uint64_t chunk_index, std::uint64_t size)>;
Moments accumulate_chunks_serial(std::uint64_t trials, std::uint64_t chunk, const ChunkFn& chunk_fn);
Moments accumulate_chunks_parallel(std::uint64_t trials, std::uint64_t chunk,
                                   const ChunkFn& chunk_fn, int threads);
Moments accumulate_chunks(std::uint64_t trials, std::uint64_t chunk, const ChunkFn& chunk_fn,
                          int threads);

/// Default worker count: SEGREG_THREADS if set, else 1.
int default_threads();

}  // namespace segreg::kernels
