#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "segreg/digit_lattice.hpp"

namespace segreg {

/// Born probabilities of one digit register; probs[j - min_digit] = P(y = j).
struct RegisterDistribution {
  int min_digit = 0;
  std::vector<double> probs;

  int max_digit() const { return min_digit + static_cast<int>(probs.size()) - 1; }
  /// Throws ContractError unless probs are >= 0 and sum to 1 within 1e-12.
  void validate() const;
};

/// Shot tallies of one register.
struct EmpiricalDigitDistribution {
  int min_digit = 0;
  std::uint64_t shots = 0;
  std::vector<std::uint64_t> tallies;

  int max_digit() const { return min_digit + static_cast<int>(tallies.size()) - 1; }
  double frequency(int digit) const;
  std::vector<double> frequencies() const;
};

/// One distribution per digit slot, in DigitConfig storage order.
using BornTable = std::vector<RegisterDistribution>;
using EmpiricalTable = std::vector<EmpiricalDigitDistribution>;
/// Candidate digits per slot, ascending.
using CandidateSets = std::vector<std::vector<int>>;

/// Registers peaked on `truth`: probability `confidence` on the true digit,
/// the rest spread evenly over the other digits of the alphabet.
BornTable synthetic_born(const DigitVector& truth, double confidence);
BornTable point_mass_born(const DigitVector& truth);

/// R categorical draws from one register.
EmpiricalDigitDistribution sample(const RegisterDistribution& reg, std::uint64_t shots,
                                  std::uint64_t seed);

/// Samples every register; register s uses stream derive_seed(seed, s), so
/// the result does not depend on `threads`.
EmpiricalTable sample_all(const BornTable& table, std::uint64_t shots, std::uint64_t seed,
                          int threads = 1);

struct CandidatePolicy {
  enum class Kind { full, top_r, threshold };
  Kind kind = Kind::full;
  int r = 1;
  double tau = 1.0;

  static CandidatePolicy full() { return {}; }
  static CandidatePolicy top(int r) { return {Kind::top_r, r, 1.0}; }
  static CandidatePolicy threshold(double tau) { return {Kind::threshold, 1, tau}; }
};

/// Candidate digits of one register, ascending. Top-r breaks frequency ties
/// toward the smaller digit; an empty threshold set falls back to top-1.
std::vector<int> candidates(const EmpiricalDigitDistribution& f, const CandidatePolicy& policy);
CandidateSets candidates(const EmpiricalTable& table, const CandidatePolicy& policy);
/// Whole alphabet at every position (classical operation, sampler bypassed).
CandidateSets full_candidates(const DigitConfig& cfg);

/// Shannon entropy with natural log and 0 log 0 = 0.
double entropy(std::span<const double> frequencies);
double entropy(const EmpiricalDigitDistribution& f);
/// eta = ln(b) - eta_delta
double entropy_threshold(int base, double eta_delta);
inline bool refine_flag(double h, double eta) { return h >= eta; }

/// Modal digit; ties go to the smaller digit.
int majority_vote(std::span<const int> shots);
/// ceil(ln((b - 1) / failure) / (2 margin^2))
std::uint64_t shots_required(double margin, double failure, int base);

/// Digit-error model delta_{k,i} = y_{k,i} - y*_{k,i}, identical in law at every
/// position and independent across components.
struct NoiseModel {
  enum class Kind { exact, independent_flip, categorical, correlated };
  Kind kind = Kind::exact;
  /// independent_flip: delta = +1 or -1 with probability epsilon / 2 each.
  double epsilon = 0.0;
  /// categorical: explicit law of delta as (value, probability) pairs.
  std::vector<std::pair<int, double>> pmf;
  /// correlated: with probability rho a shared +-1 shock hits every digit of
  /// the component, otherwise independent +-1 flips with probability
  /// (sigma2 - rho) / (1 - rho). Gives E[delta^2] = sigma2, Cov = rho.
  double sigma2 = 0.0;
  double rho = 0.0;

  static NoiseModel exact() { return {}; }
  static NoiseModel independent_flip(double eps);
  static NoiseModel categorical(std::vector<std::pair<int, double>> pmf);
  static NoiseModel correlated(double sigma2, double rho);

  void validate() const;
  double second_moment() const;  // E[delta^2]
  double mean() const;           // E[delta]
  /// E[delta_i delta_j] for i != j within one component.
  double cross_moment() const;
};

/// Exact E[(theta_k - theta*_k)^2] = sum_i E[d^2] w_i^2 + sum_{i != j} E[d_i d_j] w_i w_j,
/// with w_i = b_k(i)^i. Reduces to the covariance form for zero-mean noise.
double predict_mse(const NoiseModel& noise, const DigitConfig& cfg, int k);

struct MseEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t trials = 0;
};

/// Monte Carlo estimate of the same quantity by drawing digit errors and
/// reconstructing sum_i delta_i w_i.
MseEstimate measure_mse(const NoiseModel& noise, const DigitConfig& cfg, int k,
                        std::uint64_t trials, std::uint64_t seed, int threads = 1);

/// sigma2 sum_i w_i^2 + rho sum_{i != j} w_i w_j
double mse_bound(double sigma2, double rho, const DigitConfig& cfg, int k);
/// epsilon sum_i w_i^2 (independent bounded error rates)
double mse_bound_independent(double epsilon, const DigitConfig& cfg, int k);

}  // namespace segreg
