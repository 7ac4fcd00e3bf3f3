#include "segreg/digit_lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "segreg/error.hpp"

namespace segreg {

DigitConfig::DigitConfig(std::vector<int> bases, int n, int m, int components, bool is_signed)
    : n_(n), m_(m), components_(components), signed_(is_signed), bases_(std::move(bases)) {
  if (n < 0 || m < 0) throw ContractError("digit config: n and m must be >= 0");
  if (components < 1) throw ContractError("digit config: need at least one component");
  const auto d = static_cast<std::size_t>(depth());
  if (bases_.size() != d * static_cast<std::size_t>(components)) {
    throw ContractError("digit config: expected " + std::to_string(d * components) +
                        " bases, got " + std::to_string(bases_.size()));
  }
  weights_.resize(bases_.size());
  for (std::size_t s = 0; s < bases_.size(); ++s) {
    if (bases_[s] < 2) throw ContractError("digit config: every base must be >= 2");
    const int i = position(static_cast<int>(s % d));
    weights_[s] = std::pow(static_cast<double>(bases_[s]), i);
  }
}

DigitConfig DigitConfig::uniform(int base, int n, int m, int components, bool is_signed) {
  if (n < 0 || m < 0 || components < 1) {
    throw ContractError("digit config: invalid shape");
  }
  const auto count = static_cast<std::size_t>(n + m + 1) * static_cast<std::size_t>(components);
  return DigitConfig(std::vector<int>(count, base), n, m, components, is_signed);
}

DigitConfig DigitConfig::mixed(std::vector<int> bases, int n, int m, int components,
                               bool is_signed) {
  return DigitConfig(std::move(bases), n, m, components, is_signed);
}

std::size_t DigitConfig::slot(int k, int i) const {
  if (k < 0 || k >= components_ || i < -m_ || i > n_) {
    throw ContractError("digit position (" + std::to_string(k) + ", " + std::to_string(i) +
                        ") outside lattice");
  }
  return static_cast<std::size_t>(k) * static_cast<std::size_t>(depth()) +
         static_cast<std::size_t>(n_ - i);
}

int DigitConfig::min_digit_at(std::size_t s) const {
  return signed_ ? -(bases_[s] / 2) : 0;
}

int DigitConfig::max_digit_at(std::size_t s) const {
  return signed_ ? (bases_[s] - 1) / 2 : bases_[s] - 1;
}

bool DigitConfig::in_alphabet(int k, int i, int j) const {
  const auto s = slot(k, i);
  return j >= min_digit_at(s) && j <= max_digit_at(s);
}

bool DigitConfig::uniform_base(int k) const {
  const auto d = static_cast<std::size_t>(depth());
  const auto first = bases_.begin() + static_cast<std::ptrdiff_t>(k * d);
  return std::all_of(first, first + static_cast<std::ptrdiff_t>(d),
                     [&](int b) { return b == *first; });
}

bool DigitConfig::uniform_base() const {
  return std::all_of(bases_.begin(), bases_.end(), [&](int b) { return b == bases_.front(); });
}

double DigitConfig::component_cardinality(int k) const {
  double count = 1.0;
  for (int p = 0; p < depth(); ++p) count *= base(k, position(p));
  return count;
}

DigitVector::DigitVector(DigitConfigPtr config)
    : config_(std::move(config)), digits_(config_->size(), 0) {}

DigitVector::DigitVector(DigitConfigPtr config, std::vector<int> digits)
    : config_(std::move(config)), digits_(std::move(digits)) {
  if (digits_.size() != config_->size()) {
    throw ContractError("digit vector: expected " + std::to_string(config_->size()) +
                        " digits, got " + std::to_string(digits_.size()));
  }
  check_digits(*config_, digits_);
}

void check_digits(const DigitConfig& cfg, std::span<const int> digits) {
  if (digits.size() != cfg.size()) throw ContractError("digit string has wrong length");
  for (std::size_t s = 0; s < digits.size(); ++s) {
    if (digits[s] < cfg.min_digit_at(s) || digits[s] > cfg.max_digit_at(s)) {
      const auto d = static_cast<std::size_t>(cfg.depth());
      throw InvalidDigitError("digit " + std::to_string(digits[s]) + " at component " +
                              std::to_string(s / d) + ", position " +
                              std::to_string(cfg.position(static_cast<int>(s % d))) +
                              " is outside the alphabet of base " +
                              std::to_string(cfg.base_at(s)));
    }
  }
}

double decode_component(const DigitConfig& cfg, std::span<const int> digits, int k) {
  const auto d = static_cast<std::size_t>(cfg.depth());
  const std::size_t first = static_cast<std::size_t>(k) * d;
  // least significant first keeps the partial sums small
  double value = 0.0;
  for (std::size_t p = d; p-- > 0;) {
    value += digits[first + p] * cfg.weight_at(first + p);
  }
  return value;
}

std::vector<double> decode(const DigitConfig& cfg, std::span<const int> digits) {
  std::vector<double> theta(static_cast<std::size_t>(cfg.components()));
  for (int k = 0; k < cfg.components(); ++k) theta[k] = decode_component(cfg, digits, k);
  return theta;
}

std::vector<double> decode(const DigitVector& v) { return decode(v.config(), v.digits()); }

Range range(const DigitConfig& cfg, int k) {
  Range r;
  for (int p = cfg.depth(); p-- > 0;) {
    const int i = cfg.position(p);
    r.lo += cfg.min_digit(k, i) * cfg.weight(k, i);
    r.hi += cfg.max_digit(k, i) * cfg.weight(k, i);
  }
  return r;
}

namespace {

constexpr double kMaxExactInteger = 9007199254740992.0;  // 2^53

// Integer count of least-significant steps spanned by the component, if it
// fits in exact double / int64 arithmetic.
bool exact_integer_path(const DigitConfig& cfg, int k) {
  if (!cfg.uniform_base(k)) return false;
  return cfg.component_cardinality(k) < kMaxExactInteger;
}

void project_uniform(double value, const DigitConfig& cfg, int k, std::vector<int>& digits) {
  const int base = cfg.base(k, 0);
  const int lo_digit = cfg.min_digit(k, 0);
  const int d = cfg.depth();

  std::int64_t n_lo = 0;
  std::int64_t n_hi = 0;
  for (int p = 0; p < d; ++p) {
    n_lo = n_lo * base + lo_digit;
    n_hi = n_hi * base + cfg.max_digit(k, 0);
  }
  const double step = cfg.weight(k, -cfg.m());
  const double scaled = std::round(value / step);  // half away from zero
  auto count = static_cast<std::int64_t>(std::clamp(scaled, static_cast<double>(n_lo),
                                                    static_cast<double>(n_hi)));

  const std::size_t first = static_cast<std::size_t>(k) * static_cast<std::size_t>(d);
  for (int p = d; p-- > 0;) {
    std::int64_t r = (count - lo_digit) % base;
    if (r < 0) r += base;
    const auto digit = static_cast<int>(r) + lo_digit;
    digits[first + static_cast<std::size_t>(p)] = digit;
    count = (count - digit) / base;
  }
}

// Most significant digit first: pick the digit whose remainder is closest to
// what the remaining positions can still represent.
void project_greedy(double value, const DigitConfig& cfg, int k, std::vector<int>& digits) {
  const int d = cfg.depth();
  const std::size_t first = static_cast<std::size_t>(k) * static_cast<std::size_t>(d);
  std::vector<double> rest_lo(static_cast<std::size_t>(d) + 1, 0.0);
  std::vector<double> rest_hi(static_cast<std::size_t>(d) + 1, 0.0);
  for (int p = d; p-- > 0;) {
    const auto s = first + static_cast<std::size_t>(p);
    rest_lo[p] = rest_lo[p + 1] + cfg.min_digit_at(s) * cfg.weight_at(s);
    rest_hi[p] = rest_hi[p + 1] + cfg.max_digit_at(s) * cfg.weight_at(s);
  }
  const double half_step = cfg.weight_at(first + static_cast<std::size_t>(d - 1)) / 2.0;

  double residual = value;
  for (int p = 0; p < d; ++p) {
    const auto s = first + static_cast<std::size_t>(p);
    const double lo = rest_lo[p + 1] - half_step;
    const double hi = rest_hi[p + 1] + half_step;
    const double mid = 0.5 * (rest_lo[p + 1] + rest_hi[p + 1]);
    int best = cfg.min_digit_at(s);
    double best_gap = std::numeric_limits<double>::infinity();
    double best_centre = std::numeric_limits<double>::infinity();
    for (int j = cfg.min_digit_at(s); j <= cfg.max_digit_at(s); ++j) {
      const double r = residual - j * cfg.weight_at(s);
      const double gap = std::max({0.0, lo - r, r - hi});
      const double centre = std::abs(r - mid);
      if (gap < best_gap || (gap == best_gap && centre < best_centre)) {
        best = j;
        best_gap = gap;
        best_centre = centre;
      }
    }
    digits[s] = best;
    residual -= best * cfg.weight_at(s);
  }
}

}  // namespace

DigitVector project(std::span<const double> theta, const DigitConfigPtr& cfg) {
  if (theta.size() != static_cast<std::size_t>(cfg->components())) {
    throw ContractError("project: theta has " + std::to_string(theta.size()) +
                        " components, lattice has " + std::to_string(cfg->components()));
  }
  std::vector<int> digits(cfg->size(), 0);
  for (int k = 0; k < cfg->components(); ++k) {
    if (!std::isfinite(theta[k])) {
      throw DomainError("project: component " + std::to_string(k) + " is not finite");
    }
    const Range r = range(*cfg, k);
    const double clamped = std::clamp(theta[k], r.lo, r.hi);
    if (exact_integer_path(*cfg, k)) {
      project_uniform(clamped, *cfg, k, digits);
    } else {
      project_greedy(clamped, *cfg, k, digits);
    }
  }
  return DigitVector(cfg, std::move(digits));
}

DigitVector perturb(const DigitVector& v, int k, int i, int j) {
  const auto& cfg = v.config();
  if (!cfg.in_alphabet(k, i, j)) {
    throw InvalidDigitError("perturb: digit " + std::to_string(j) +
                            " is outside the alphabet at (" + std::to_string(k) + ", " +
                            std::to_string(i) + ")");
  }
  std::vector<int> digits(v.digits().begin(), v.digits().end());
  digits[cfg.slot(k, i)] = j;
  return DigitVector(v.config_ptr(), std::move(digits));
}

double clipping_error_bound(double theta, const DigitConfig& cfg, int k) {
  const Range r = range(cfg, k);
  if (theta > r.hi) return theta - r.hi;
  if (theta < r.lo) return r.lo - theta;
  return 0.0;
}

}  // namespace segreg
