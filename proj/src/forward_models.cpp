#include "segreg/forward_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "segreg/error.hpp"

namespace segreg {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols) throw ContractError("matrix rows have unequal length");
    std::copy(rows[r].begin(), rows[r].end(), m.data.begin() + static_cast<std::ptrdiff_t>(r * m.cols));
  }
  return m;
}

double Matrix::frobenius_norm() const {
  double sum = 0.0;
  for (double v : data) sum += v * v;
  return std::sqrt(sum);
}

std::vector<double> ForwardModel::eval(std::span<const double> theta) const {
  std::vector<double> out(output_dim());
  eval_into(theta, out);
  return out;
}

void ForwardModel::eval_into(std::span<const double> theta, std::span<double> out) const {
  if (theta.size() != input_dim()) {
    throw ContractError(name() + ": expected " + std::to_string(input_dim()) +
                        " parameters, got " + std::to_string(theta.size()));
  }
  if (out.size() != output_dim()) throw ContractError(name() + ": output buffer has wrong size");
  calls_.fetch_add(1, std::memory_order_relaxed);
  evaluate(theta, out);
}

LinearModel::LinearModel(Matrix a) : a_(std::move(a)) {
  if (a_.rows == 0 || a_.cols == 0) throw ContractError("linear model: empty matrix");
}

void LinearModel::evaluate(std::span<const double> theta, std::span<double> out) const {
  for (std::size_t r = 0; r < a_.rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a_.cols; ++c) acc += a_(r, c) * theta[c];
    out[r] = acc;
  }
}

namespace {

// sin(k pi x), exactly zero on the Dirichlet boundary.
double sine_mode(int k, double x) {
  if (x == 0.0 || x == 1.0) return 0.0;
  return std::sin(k * std::numbers::pi * x);
}

}  // namespace

WaveModel::WaveModel(int modes, std::vector<double> sensors, double final_time, double speed)
    : modes_(modes),
      sensors_(std::move(sensors)),
      final_time_(final_time),
      speed_(speed),
      basis_(sensors_.size(), static_cast<std::size_t>(modes)) {
  if (modes < 1) throw ContractError("wave model: need at least one mode");
  if (sensors_.empty()) throw ContractError("wave model: need at least one sensor");
  if (!std::isfinite(final_time) || final_time < 0.0) {
    throw ContractError("wave model: final time must be finite and >= 0");
  }
  if (!std::isfinite(speed)) throw ContractError("wave model: wave speed must be finite");
  for (std::size_t l = 0; l < sensors_.size(); ++l) {
    const double x = sensors_[l];
    if (!(x >= 0.0 && x <= 1.0)) throw ContractError("wave model: sensors must lie in [0, 1]");
    for (int k = 1; k <= modes; ++k) {
      const double temporal = std::cos(k * std::numbers::pi * speed * final_time);
      basis_(l, static_cast<std::size_t>(k - 1)) = sine_mode(k, x) * temporal;
    }
  }
}

std::vector<double> WaveModel::uniform_sensors(std::size_t count) {
  if (count == 0) throw ContractError("wave model: need at least one sensor");
  if (count == 1) return {0.5};
  std::vector<double> x(count);
  for (std::size_t l = 0; l < count; ++l) {
    x[l] = static_cast<double>(l) / static_cast<double>(count - 1);
  }
  x.back() = 1.0;
  return x;
}

double WaveModel::initial_displacement(std::span<const double> theta, double x) {
  double u = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    u += theta[k] * sine_mode(static_cast<int>(k) + 1, x);
  }
  return u;
}

void WaveModel::evaluate(std::span<const double> theta, std::span<double> out) const {
  for (std::size_t l = 0; l < basis_.rows; ++l) {
    double acc = 0.0;
    for (std::size_t k = 0; k < basis_.cols; ++k) acc += basis_(l, k) * theta[k];
    out[l] = acc;
  }
}

FunctionModel::FunctionModel(std::string name, std::size_t input_dim, std::size_t output_dim,
                             Fn fn, std::optional<double> lipschitz)
    : name_(std::move(name)),
      input_dim_(input_dim),
      output_dim_(output_dim),
      fn_(std::move(fn)),
      lipschitz_(lipschitz) {
  if (!fn_) throw ContractError("function model: empty callable");
}

void FunctionModel::evaluate(std::span<const double> theta, std::span<double> out) const {
  fn_(theta, out);
}

namespace {

constexpr std::array<double, 16> kDeceptiveTable = {
    1.0, 2.0, 1.5, 0.0,   // leading digit 0: global minimum at 3
    0.5, 0.4, 0.3, 0.2,   // leading digit 1: looks best while the low digit is 0
    3.0, 3.1, 3.2, 3.3,   //
    3.4, 3.5, 3.6, 3.7};  //

}  // namespace

double deceptive_error(double theta) {
  // piecewise linear through the table, constant outside [0, 15]
  const double t = std::clamp(theta, 0.0, 15.0);
  const auto lo = static_cast<std::size_t>(std::floor(t));
  if (lo >= 15) return kDeceptiveTable[15];
  const double frac = t - static_cast<double>(lo);
  return kDeceptiveTable[lo] * (1.0 - frac) + kDeceptiveTable[lo + 1] * frac;
}

std::shared_ptr<const FunctionModel> make_deceptive_model() {
  return std::make_shared<const FunctionModel>(
      "deceptive", 1, 1, [](std::span<const double> theta, std::span<double> out) {
        out[0] = std::sqrt(deceptive_error(theta[0]));
      });
}

DigitConfig deceptive_config() { return DigitConfig::uniform(4, 1, 0, 1); }

std::vector<double> LossSpec::geometric_omega(const DigitConfig& cfg, double w0) {
  std::vector<double> omega(cfg.size());
  for (std::size_t s = 0; s < omega.size(); ++s) omega[s] = w0 / cfg.weight_at(s);
  return omega;
}

void LossSpec::validate(std::size_t output_dim, const DigitConfig* cfg) const {
  if (observation.size() != output_dim) {
    throw ContractError("loss: observation has " + std::to_string(observation.size()) +
                        " entries, model output has " + std::to_string(output_dim));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ContractError("loss: lambda must be >= 0");
  for (double w : omega) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ContractError("loss: omega must be >= 0");
  }
  if (cfg != nullptr && !omega.empty() && omega.size() != cfg->size()) {
    throw ContractError("loss: omega needs one weight per digit");
  }
  if (!weight) return;
  const Matrix& w = *weight;
  if (w.rows != output_dim || w.cols != output_dim) {
    throw ContractError("loss: weight matrix must be L x L");
  }
  const std::size_t n = w.rows;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r + 1; c < n; ++c) {
      const double scale = std::max({1.0, std::abs(w(r, c)), std::abs(w(c, r))});
      if (std::abs(w(r, c) - w(c, r)) > 1e-12 * scale) {
        throw ContractError("loss: weight matrix must be symmetric");
      }
    }
  }
  // Semi-definite Cholesky: a zero pivot is fine only if its column is zero.
  Matrix l(n, n);
  const double tol = 1e-12 * std::max(1.0, w.frobenius_norm());
  for (std::size_t j = 0; j < n; ++j) {
    double diag = w(j, j);
    for (std::size_t p = 0; p < j; ++p) diag -= l(j, p) * l(j, p);
    if (diag < -tol) throw ContractError("loss: weight matrix is not positive semi-definite");
    if (diag <= tol) {
      for (std::size_t r = j + 1; r < n; ++r) {
        double off = w(r, j);
        for (std::size_t p = 0; p < j; ++p) off -= l(r, p) * l(j, p);
        if (std::abs(off) > std::sqrt(tol)) {
          throw ContractError("loss: weight matrix is not positive semi-definite");
        }
      }
      continue;
    }
    l(j, j) = std::sqrt(diag);
    for (std::size_t r = j + 1; r < n; ++r) {
      double off = w(r, j);
      for (std::size_t p = 0; p < j; ++p) off -= l(r, p) * l(j, p);
      l(r, j) = off / l(j, j);
    }
  }
}

double weighted_error(const LossSpec& spec, std::span<const double> prediction) {
  if (prediction.size() != spec.observation.size()) {
    throw ContractError("error: model output has " + std::to_string(prediction.size()) +
                        " entries, observation has " + std::to_string(spec.observation.size()));
  }
  const std::size_t n = prediction.size();
  if (!spec.weight) {
    double sum = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double r = prediction[l] - spec.observation[l];
      sum += r * r;
    }
    return sum;
  }
  const Matrix& w = *spec.weight;
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double rr = prediction[r] - spec.observation[r];
    if (rr == 0.0) continue;
    double row = 0.0;
    for (std::size_t c = 0; c < n; ++c) row += w(r, c) * (prediction[c] - spec.observation[c]);
    sum += rr * row;
  }
  return sum;
}

double error_at(const LossSpec& spec, const ForwardModel& model, std::span<const double> theta) {
  if (model.output_dim() != spec.observation.size()) {
    throw ContractError("error: model output has " + std::to_string(model.output_dim()) +
                        " entries, observation has " + std::to_string(spec.observation.size()));
  }
  const auto z = model.eval(theta);
  return weighted_error(spec, z);
}

double error(const LossSpec& spec, const ForwardModel& model, const DigitConfig& cfg,
             std::span<const int> digits) {
  const auto theta = decode(cfg, digits);
  return error_at(spec, model, theta);
}

double error(const LossSpec& spec, const ForwardModel& model, const DigitVector& y) {
  return error(spec, model, y.config(), y.digits());
}

double regularizer(const LossSpec& spec, std::span<const int> digits) {
  if (spec.omega.empty()) return 0.0;
  if (spec.omega.size() != digits.size()) throw ContractError("loss: omega needs one weight per digit");
  double sum = 0.0;
  for (std::size_t s = 0; s < digits.size(); ++s) sum += spec.omega[s] * std::abs(digits[s]);
  return sum;
}

double regularizer(const LossSpec& spec, const DigitVector& y) {
  return regularizer(spec, y.digits());
}

double loss(const LossSpec& spec, const ForwardModel& model, const DigitVector& y) {
  const double e = error(spec, model, y);
  if (spec.lambda == 0.0) return e;
  return e + spec.lambda * regularizer(spec, y);
}

std::map<std::pair<int, int>, double> digit_sensitivity(const ForwardModel& model,
                                                        const DigitVector& y) {
  const auto& cfg = y.config();
  const auto base_out = model.eval(decode(y));
  std::vector<int> digits(y.digits().begin(), y.digits().end());
  std::vector<double> out(model.output_dim());
  std::map<std::pair<int, int>, double> result;
  for (int k = 0; k < cfg.components(); ++k) {
    for (int p = 0; p < cfg.depth(); ++p) {
      const int i = cfg.position(p);
      const auto s = cfg.slot(k, i);
      const int current = digits[s];
      double worst = 0.0;
      for (int j = cfg.min_digit_at(s); j <= cfg.max_digit_at(s); ++j) {
        if (j == current) continue;
        digits[s] = j;
        const auto theta = decode(cfg, digits);
        model.eval_into(theta, out);
        double dist = 0.0;
        for (std::size_t l = 0; l < out.size(); ++l) {
          const double r = out[l] - base_out[l];
          dist += r * r;
        }
        worst = std::max(worst, dist / cfg.weight_at(s));
      }
      digits[s] = current;
      result[{k, i}] = worst;
    }
  }
  return result;
}

}  // namespace segreg
