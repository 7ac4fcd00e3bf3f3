#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace segreg {

/// Shape of the digit lattice: M components, each expanded over positions
/// i = -m..n (d = n + m + 1 digits) with a base per (component, position).
///
/// Digits are stored component-major, most significant position first, so a
/// flat digit string compares lexicographically from the coarsest digit of
/// the first component down.
class DigitConfig {
 public:
  static DigitConfig uniform(int base, int n, int m, int components, bool is_signed = false);

  /// `bases` has components * (n + m + 1) entries in storage order.
  static DigitConfig mixed(std::vector<int> bases, int n, int m, int components,
                           bool is_signed = false);

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  int depth() const noexcept { return n_ + m_ + 1; }
  int components() const noexcept { return components_; }
  bool is_signed() const noexcept { return signed_; }
  std::size_t size() const noexcept { return bases_.size(); }

  /// Flat storage index of digit (k, i).
  std::size_t slot(int k, int i) const;
  /// Position index i of the p-th digit within a component (p = 0 is i = n).
  int position(int p) const noexcept { return n_ - p; }

  int base(int k, int i) const { return bases_[slot(k, i)]; }
  int min_digit(int k, int i) const { return min_digit_at(slot(k, i)); }
  int max_digit(int k, int i) const { return max_digit_at(slot(k, i)); }
  bool in_alphabet(int k, int i, int j) const;
  /// b_{k,i}^i
  double weight(int k, int i) const { return weights_[slot(k, i)]; }

  int base_at(std::size_t s) const { return bases_[s]; }
  int min_digit_at(std::size_t s) const;
  int max_digit_at(std::size_t s) const;
  double weight_at(std::size_t s) const { return weights_[s]; }

  /// True when every position of component k shares one base.
  bool uniform_base(int k) const;
  /// True when the whole lattice shares one base.
  bool uniform_base() const;

  /// Number of lattice points of one component (product of its bases).
  double component_cardinality(int k) const;

  bool operator==(const DigitConfig&) const = default;

 private:
  DigitConfig(std::vector<int> bases, int n, int m, int components, bool is_signed);

  int n_ = 0;
  int m_ = 0;
  int components_ = 0;
  bool signed_ = false;
  std::vector<int> bases_;
  std::vector<double> weights_;
};

using DigitConfigPtr = std::shared_ptr<const DigitConfig>;

inline DigitConfigPtr make_config(DigitConfig cfg) {
  return std::make_shared<const DigitConfig>(std::move(cfg));
}

/// A point of the digit lattice. Immutable apart from assignment; every
/// constructor checks digits against their alphabets.
class DigitVector {
 public:
  /// All-zero digits.
  explicit DigitVector(DigitConfigPtr config);
  DigitVector(DigitConfigPtr config, std::vector<int> digits);

  const DigitConfig& config() const noexcept { return *config_; }
  const DigitConfigPtr& config_ptr() const noexcept { return config_; }

  int digit(int k, int i) const { return digits_[config_->slot(k, i)]; }
  std::span<const int> digits() const noexcept { return digits_; }

  bool operator==(const DigitVector& other) const { return digits_ == other.digits_; }
  std::strong_ordering operator<=>(const DigitVector& other) const {
    return digits_ <=> other.digits_;
  }

 private:
  DigitConfigPtr config_;
  std::vector<int> digits_;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Throws InvalidDigitError if any digit falls outside its alphabet.
void check_digits(const DigitConfig& cfg, std::span<const int> digits);

/// theta_k = sum_i y_{k,i} b_{k,i}^i. Digits are not checked.
double decode_component(const DigitConfig& cfg, std::span<const int> digits, int k);
std::vector<double> decode(const DigitConfig& cfg, std::span<const int> digits);
std::vector<double> decode(const DigitVector& v);

/// Smallest and largest representable value of component k, by direct summation.
Range range(const DigitConfig& cfg, int k);

/// Nearest lattice point per component after clamping to the representable
/// range. Uniform-base components round exactly (ties away from zero);
/// mixed-base components are projected greedily, most significant digit first.
DigitVector project(std::span<const double> theta, const DigitConfigPtr& cfg);

/// Copy of v with digit (k, i) replaced by j.
DigitVector perturb(const DigitVector& v, int k, int i, int j);

/// Distance from theta to the representable range of component k (0 inside).
double clipping_error_bound(double theta, const DigitConfig& cfg, int k);

}  // namespace segreg
