#pragma once

#include <cmath>
#include <random>
#include <vector>
#include <algorithm>

#include "levelset.hpp"

namespace testing_support {

/// Band-limited field with independent N(0, 1) coefficients (std::mt19937
/// keeps these fixtures independent of the library's own generator).
inline levelset::SpectralField random_field(const levelset::ModeSetPtr& modes, unsigned seed, double decay = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  levelset::SpectralField f(modes);
  for (size_t i = 0; i < f.size(); ++i) {
    f.coeffs()[i] = n(rng) * std::pow(static_cast<double>(modes->modes()[i].norm2()), -0.5 * decay);
  }
  return f;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Standard normal CDF.
inline double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// One-sample Kolmogorov-Smirnov statistic against N(0, 1).
inline double ks_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double f = phi(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Asymptotic KS critical value at significance 1e-3.
inline double ks_critical_1e3(size_t n) { return 1.9495 / std::sqrt(static_cast<double>(n)); }

}  // namespace testing_support
