#pragma once

// Brute-force reference computations used by the tests. Nothing here calls
// into the optimizer; everything is enumeration or textbook formulas.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "segreg/digit_lattice.hpp"
#include "segreg/forward_models.hpp"

namespace oracle {

/// Digit alphabet of one base, written out directly.
inline std::vector<int> alphabet(int base, bool is_signed) {
  std::vector<int> a;
  const int lo = is_signed ? -(base / 2) : 0;
  for (int j = 0; j < base; ++j) a.push_back(lo + j);
  return a;
}

/// theta_k = sum over positions of digit * base^i, positions listed high to low.
inline double digit_sum(const std::vector<int>& digits, int base, int n) {
  double v = 0.0;
  for (std::size_t p = 0; p < digits.size(); ++p) {
    v += digits[p] * std::pow(static_cast<double>(base), n - static_cast<int>(p));
  }
  return v;
}

/// Calls fn on every flat digit string of the lattice (odometer order).
inline void enumerate(const segreg::DigitConfig& cfg,
                      const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> y(cfg.size());
  for (std::size_t s = 0; s < y.size(); ++s) y[s] = cfg.min_digit_at(s);
  while (true) {
    fn(y);
    std::size_t s = y.size();
    while (s > 0) {
      --s;
      if (y[s] < cfg.max_digit_at(s)) {
        ++y[s];
        break;
      }
      y[s] = cfg.min_digit_at(s);
      if (s == 0) return;
    }
    if (y.empty()) return;
  }
}

struct Minimum {
  double loss = std::numeric_limits<double>::infinity();
  std::vector<int> digits;
  std::size_t ties = 0;  // strings attaining the minimum
};

/// Global minimum of E + lambda R over the whole lattice.
inline Minimum global_minimum(const segreg::ForwardModel& model, const segreg::LossSpec& spec,
                              const segreg::DigitConfig& cfg) {
  Minimum best;
  enumerate(cfg, [&](const std::vector<int>& y) {
    std::vector<double> theta(static_cast<std::size_t>(cfg.components()), 0.0);
    for (std::size_t s = 0; s < y.size(); ++s) {
      theta[s / static_cast<std::size_t>(cfg.depth())] += y[s] * cfg.weight_at(s);
    }
    const auto z = model.eval(theta);
    double e = 0.0;
    for (std::size_t l = 0; l < z.size(); ++l) {
      const double r = z[l] - spec.observation[l];
      e += r * r;
    }
    double reg = 0.0;
    for (std::size_t s = 0; s < spec.omega.size(); ++s) reg += spec.omega[s] * std::abs(y[s]);
    const double l = e + spec.lambda * reg;
    if (l < best.loss) {
      best = {l, y, 1};
    } else if (l == best.loss) {
      ++best.ties;
    }
  });
  return best;
}

/// Nearest lattice value of one scalar by scanning every representable value.
inline double nearest_value(double theta, const segreg::DigitConfig& cfg) {
  double best = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::infinity();
  enumerate(cfg, [&](const std::vector<int>& y) {
    double v = 0.0;
    for (std::size_t s = 0; s < y.size(); ++s) v += y[s] * cfg.weight_at(s);
    if (std::abs(v - theta) < gap) {
      gap = std::abs(v - theta);
      best = v;
    }
  });
  return best;
}

/// Exact probability that a plurality vote over n shots picks a wrong digit
/// for a binary register with P(correct) = p. Ties count as errors when
/// `ties_wrong`, as correct otherwise.
inline double binary_vote_error(std::uint64_t n, double p, bool ties_wrong) {
  double err = 0.0;
  for (std::uint64_t c = 0; c <= n; ++c) {
    const double logp = std::lgamma(n + 1.0) - std::lgamma(c + 1.0) - std::lgamma(n - c + 1.0) +
                        c * std::log(p) + (n - c) * std::log1p(-p);
    const double w = std::exp(logp);
    if (2 * c < n || (2 * c == n && ties_wrong)) err += w;
  }
  return err;
}

}  // namespace oracle
