#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segreg/digit_lattice.hpp"

namespace segreg {

/// Dense row-major matrix, just enough for forward models and weights.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double frobenius_norm() const;
  bool operator==(const Matrix&) const = default;
};

/// Black-box forward map F: R^M -> R^L.
///
/// eval() is const and thread-safe; the only shared state touched is an
/// atomic call counter, which the search accounting reads.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  ForwardModel() = default;
  ForwardModel(const ForwardModel&) = delete;
  ForwardModel& operator=(const ForwardModel&) = delete;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual std::string name() const = 0;
  /// Upper bound on the global Lipschitz constant, when known.
  virtual std::optional<double> lipschitz_bound() const { return std::nullopt; }

  std::vector<double> eval(std::span<const double> theta) const;
  void eval_into(std::span<const double> theta, std::span<double> out) const;

  std::uint64_t calls() const noexcept { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() const noexcept { calls_.store(0, std::memory_order_relaxed); }

 protected:
  virtual void evaluate(std::span<const double> theta, std::span<double> out) const = 0;

 private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

using ForwardModelPtr = std::shared_ptr<const ForwardModel>;

/// F(theta) = A theta.
class LinearModel final : public ForwardModel {
 public:
  explicit LinearModel(Matrix a);

  std::size_t input_dim() const override { return a_.cols; }
  std::size_t output_dim() const override { return a_.rows; }
  std::string name() const override { return "linear"; }
  /// Frobenius norm, which bounds the spectral norm from above.
  std::optional<double> lipschitz_bound() const override { return a_.frobenius_norm(); }
  const Matrix& matrix() const noexcept { return a_; }

 protected:
  void evaluate(std::span<const double> theta, std::span<double> out) const override;

 private:
  Matrix a_;
};

/// Final-time state of the 1D wave equation on [0, 1] with Dirichlet ends,
/// zero initial velocity and initial displacement sum_k theta_k sin(k pi x):
///
///   u(x, T) = sum_k theta_k sin(k pi x) cos(k pi c T)
///
/// sampled at fixed sensor positions.
class WaveModel final : public ForwardModel {
 public:
  WaveModel(int modes, std::vector<double> sensors, double final_time, double speed = 1.0);

  /// `count` evenly spaced sensors covering [0, 1] including both ends.
  static std::vector<double> uniform_sensors(std::size_t count);

  std::size_t input_dim() const override { return static_cast<std::size_t>(modes_); }
  std::size_t output_dim() const override { return sensors_.size(); }
  std::string name() const override { return "wave"; }
  std::optional<double> lipschitz_bound() const override { return basis_.frobenius_norm(); }

  int modes() const noexcept { return modes_; }
  const std::vector<double>& sensors() const noexcept { return sensors_; }
  double final_time() const noexcept { return final_time_; }
  double speed() const noexcept { return speed_; }

  /// u_0(x) for the given coefficients; does not touch the call counter.
  static double initial_displacement(std::span<const double> theta, double x);

 protected:
  void evaluate(std::span<const double> theta, std::span<double> out) const override;

 private:
  int modes_;
  std::vector<double> sensors_;
  double final_time_;
  double speed_;
  Matrix basis_;  // sensors x modes
};

/// Wraps an arbitrary callable; used for toy landscapes and tests.
class FunctionModel final : public ForwardModel {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;
  FunctionModel(std::string name, std::size_t input_dim, std::size_t output_dim, Fn fn,
                std::optional<double> lipschitz = std::nullopt);

  std::size_t input_dim() const override { return input_dim_; }
  std::size_t output_dim() const override { return output_dim_; }
  std::string name() const override { return name_; }
  std::optional<double> lipschitz_bound() const override { return lipschitz_; }

 protected:
  void evaluate(std::span<const double> theta, std::span<double> out) const override;

 private:
  std::string name_;
  std::size_t input_dim_;
  std::size_t output_dim_;
  Fn fn_;
  std::optional<double> lipschitz_;
};

/// One-component landscape on the base-4 lattice {0, ..., 15} (n = 1, m = 0)
/// whose leading digit is deceptive: with the low digit at zero the best
/// leading digit is 1 (values 4..7), but the global minimum sits at 3.
/// With observation x = 0 the error is E(theta) = deceptive_error(theta).
std::shared_ptr<const FunctionModel> make_deceptive_model();
DigitConfig deceptive_config();
double deceptive_error(double theta);
inline constexpr double kDeceptiveOptimum = 3.0;

/// Observation, weighting and digit regularizer of the loss
///   L(y) = (F(y) - x)^T W (F(y) - x) + lambda * sum omega_{k,i} |y_{k,i}|.
struct LossSpec {
  std::vector<double> observation;
  std::optional<Matrix> weight;  // identity when empty
  double lambda = 0.0;
  std::vector<double> omega;     // per digit slot; empty means all zero

  /// omega_{k,i} = w0 * b_{k,i}^{-i}: heavier on low-significance digits.
  static std::vector<double> geometric_omega(const DigitConfig& cfg, double w0);

  /// Dimension, symmetry and semi-definiteness checks.
  void validate(std::size_t output_dim, const DigitConfig* cfg = nullptr) const;
};

/// (z - x)^T W (z - x) for a precomputed prediction z. No forward call.
double weighted_error(const LossSpec& spec, std::span<const double> prediction);

/// E at a real parameter vector; one forward call.
double error_at(const LossSpec& spec, const ForwardModel& model, std::span<const double> theta);
double error(const LossSpec& spec, const ForwardModel& model, const DigitVector& y);
double error(const LossSpec& spec, const ForwardModel& model, const DigitConfig& cfg,
             std::span<const int> digits);

double regularizer(const LossSpec& spec, std::span<const int> digits);
double regularizer(const LossSpec& spec, const DigitVector& y);

double loss(const LossSpec& spec, const ForwardModel& model, const DigitVector& y);

/// Empirical digitwise sensitivity: for every (k, i), the largest
/// ||F(y) - F(y')||^2 / b^i over single-digit changes y' of y.
std::map<std::pair<int, int>, double> digit_sensitivity(const ForwardModel& model,
                                                        const DigitVector& y);

}  // namespace segreg
