#pragma once

// Measurable statistics of sampled fields: empirical structure functions,
// the sin-sum lattice series, Frostman masses and energies, occupation
// fractions and the two-point covariance determinant survey.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "levelset/box_counting.hpp"
#include "levelset/fft.hpp"
#include "levelset/linear.hpp"
#include "levelset/noise.hpp"

namespace levelset {

/// |x|_T: distance to the nearest lattice translate of x (period 2 pi).
inline double torus_norm(double x1, double x2) {
  auto wrap = [](double v) { return std::abs(v - kTwoPi * std::round(v / kTwoPi)); };
  return std::hypot(wrap(x1), wrap(x2));
}

/// Displacement in whole grid cells.
struct Lag {
  int d1 = 0;
  int d2 = 0;
};

struct StructurePoint {
  double distance = 0.0;  // torus distance
  double value = 0.0;     // mean squared increment
  int lags = 0;           // lags averaged into this point
};

struct StructureFunctionEstimate {
  std::vector<StructurePoint> points;
  int samples = 0;
  double slope = 0.0;
  double stderr_slope = 0.0;
};

/// Mean of |g(x + r) - g(x)|^2 over the grid points of one sample.
inline double mean_square_increment(const GridField& g, Lag lag) {
  const int n = g.size();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const int ii = ((i + lag.d1) % n + n) % n;
    for (int j = 0; j < n; ++j) {
      const double d = g(ii, ((j + lag.d2) % n + n) % n) - g(i, j);
      s += d * d;
    }
  }
  return s / (static_cast<double>(n) * n);
}

/// Assembles the estimate from ensemble means of mean_square_increment
/// (one per lag); lags of equal torus length are averaged together and the
/// slope is fitted over all nonzero distances.
inline StructureFunctionEstimate structure_function_from_means(int grid, std::span<const Lag> lags,
                                                               std::span<const double> means, int samples) {
  const double h = kTwoPi / grid;
  std::map<double, std::pair<double, int>> grouped;
  for (size_t q = 0; q < lags.size(); ++q) {
    const double dist = torus_norm(lags[q].d1 * h, lags[q].d2 * h);
    // Rounded keys put symmetric lags in one bucket.
    auto& slot = grouped[std::round(dist * 1e9) / 1e9];
    slot.first += means[q];
    slot.second += 1;
  }
  StructureFunctionEstimate out;
  out.samples = samples;
  std::vector<double> lx, ly;
  for (const auto& [dist, v] : grouped) {
    const StructurePoint p{dist, v.first / v.second, v.second};
    out.points.push_back(p);
    if (dist > 0.0 && p.value > 0.0) {
      lx.push_back(std::log(dist));
      ly.push_back(std::log(p.value));
    }
  }
  if (lx.size() >= 2) {
    const auto fit = least_squares(lx, ly);
    out.slope = fit.slope;
    out.stderr_slope = fit.stderr_slope;
  }
  return out;
}

/// Ensemble-and-space average of squared increments per lag.
inline StructureFunctionEstimate structure_function_empirical(std::span<const GridField> samples,
                                                              std::span<const Lag> lags, int min_samples = 50) {
  if (static_cast<int>(samples.size()) < min_samples) {
    throw ParameterError("structure function needs >= " + std::to_string(min_samples) + " samples, got " +
                         std::to_string(samples.size()));
  }
  const int n = samples.front().size();
  for (const auto& g : samples) {
    if (g.size() != n) throw ResolutionError("structure function samples differ in resolution");
  }
  std::vector<double> means(lags.size(), 0.0);
  for (size_t q = 0; q < lags.size(); ++q) {
    for (const auto& g : samples) means[q] += mean_square_increment(g, lags[q]);
    means[q] /= static_cast<double>(samples.size());
  }
  return structure_function_from_means(n, lags, means, static_cast<int>(samples.size()));
}

/// Lags along both axes at the given cell distances.
inline std::vector<Lag> axis_lags(std::span<const int> cells) {
  std::vector<Lag> out;
  for (int c : cells) {
    out.push_back({c, 0});
    out.push_back({0, c});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sin-sum series

/// h_2(r) = -r^2 log r, otherwise h_gamma(r) = r^{min(gamma, 2)}.
inline double h_gamma(double r, double gamma) {
  if (gamma == 2.0) return -r * r * std::log(r);
  return std::pow(r, std::min(gamma, 2.0));
}

/// Truncated sum over 0 < |k| <= cutoff of |k|^{-(d + gamma)} sin^2(k . x),
/// d in {1, 2} (d = 1 uses x1 only), with a bound on the discarded tail.
inline SeriesValue sin_sum(double x1, double x2, double gamma, int d, int cutoff) {
  if (!(gamma > 0.0)) throw ParameterError("sin_sum requires gamma > 0");
  if (d != 1 && d != 2) throw ParameterError("sin_sum supports d = 1 or d = 2");
  if (cutoff < 1) throw ParameterError("series cutoff must be >= 1");
  SeriesValue out;
  if (x1 == 0.0 && (d == 1 || x2 == 0.0)) return out;
  const double s = d + gamma;
  double sum = 0.0;
  if (d == 1) {
    for (int k = 1; k <= cutoff; ++k) {
      const double v = std::sin(k * x1);
      sum += 2.0 * v * v * std::pow(static_cast<double>(k), -s);
    }
    out.tail_bound = 2.0 * std::pow(static_cast<double>(cutoff), -gamma) / gamma;
  } else {
    // Half lattice, doubled: the summand is even in k.
    const std::int64_t r2 = std::int64_t{cutoff} * cutoff;
    for (int k1 = 0; k1 <= cutoff; ++k1) {
      for (int k2 = k1 == 0 ? 1 : -cutoff; k2 <= cutoff; ++k2) {
        const std::int64_t n2 = std::int64_t{k1} * k1 + std::int64_t{k2} * k2;
        if (n2 > r2) continue;
        const double v = std::sin(k1 * x1 + k2 * x2);
        sum += 2.0 * v * v * std::pow(static_cast<double>(n2), -0.5 * s);
      }
    }
    out.tail_bound = detail::lattice_tail_bound(cutoff, s);
  }
  out.value = sum;
  return out;
}

// ---------------------------------------------------------------------------
// Frostman measures mu_n = sqrt(2 pi n) exp(-n (g - y)^2 / 2) dx

/// Largest n whose kernel width 1/sqrt(n) still exceeds the mean one-cell
/// increment of the field: n_max = 1 / mean((g(x + h e_j) - g(x))^2).
inline double frostman_max_n(const GridField& g) {
  const int n = g.size();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = g.wrapped(i + 1, j) - g(i, j);
      const double b = g.wrapped(i, j + 1) - g(i, j);
      s += a * a + b * b;
    }
  }
  const double mean = s / (2.0 * n * n);
  return mean > 0.0 ? 1.0 / mean : std::numeric_limits<double>::infinity();
}

namespace detail {
inline void require_resolved(const GridField& g, double n) {
  if (!(n > 0.0)) throw ParameterError("Frostman parameter n > 0 violated");
  const double n_max = frostman_max_n(g);
  if (n > n_max) {
    throw ResolutionError("Frostman parameter n = " + std::to_string(n) + " exceeds resolution limit n_max = " +
                          std::to_string(n_max) + " at grid " + std::to_string(g.size()));
  }
}

inline std::vector<double> frostman_density(const GridField& g, double y, double n) {
  const double norm = std::sqrt(kTwoPi * n);
  std::vector<double> rho(g.values().size());
  for (size_t q = 0; q < rho.size(); ++q) {
    const double d = g.values()[q] - y;
    rho[q] = norm * std::exp(-0.5 * n * d * d);
  }
  return rho;
}
}  // namespace detail

/// Grid quadrature of mu_n(T).
inline double frostman_mass(const GridField& g, double y, double n) {
  detail::require_resolved(g, n);
  const double h = g.spacing();
  double s = 0.0;
  for (double r : detail::frostman_density(g, y, n)) s += r;
  return s * h * h;
}

struct FrostmanEnergy {
  double energy = 0.0;         // off-diagonal double quadrature
  double diagonal_bound = 0.0; // bound on the excluded same-cell contribution
};

/// Spectrum of the kernel |x|_T^{-gamma} on an n x n grid, zero at the origin cell.
class EnergyKernel {
 public:
  EnergyKernel(int n, double gamma) : n_(n), gamma_(gamma) {
    if (!(gamma > 0.0) || !(gamma < 2.0)) throw ParameterError("energy requires 0 < gamma < 2");
    fft::RealPlan2d plan(n);
    const double h = kTwoPi / n;
    auto kern = plan.real();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        kern[static_cast<size_t>(i) * n + j] = (i == 0 && j == 0) ? 0.0 : std::pow(torus_norm(i * h, j * h), -gamma);
      }
    }
    plan.forward();
    spectrum_.reserve(plan.spectrum().size());
    for (const auto& c : plan.spectrum()) spectrum_.push_back(c.real());
  }

  int size() const { return n_; }
  double gamma() const { return gamma_; }

  /// Double quadrature of |x - x'|_T^{-gamma} against the cell masses of
  /// `density`, as a periodic convolution. Same-cell pairs are excluded;
  /// their exact contribution is at most
  /// sum_i rho_i^2 h^2 2 pi (sqrt2 h)^{2-gamma} / (2 - gamma).
  FrostmanEnergy energy(const GridField& density) const {
    if (density.size() != n_) throw ResolutionError("energy kernel and density differ in resolution");
    const double h = density.spacing();
    auto& pm = fft::workspace(n_, 3);
    auto mass = pm.real();
    for (size_t q = 0; q < mass.size(); ++q) mass[q] = density.values()[q] * h * h;
    pm.forward();
    const auto sm = pm.spectrum();
    // Parseval over the half-complex layout: interior columns count twice.
    const int half = pm.half();
    double e = 0.0;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < half; ++j) {
        const size_t q = static_cast<size_t>(i) * half + j;
        const double w = (j == 0 || j == n_ / 2) ? 1.0 : 2.0;
        e += w * std::norm(sm[q]) * spectrum_[q];
      }
    }
    FrostmanEnergy out;
    out.energy = e / (static_cast<double>(n_) * n_);
    double rho2 = 0.0;
    for (double r : density.values()) rho2 += r * r;
    out.diagonal_bound = rho2 * h * h * kTwoPi * std::pow(std::numbers::sqrt2 * h, 2.0 - gamma_) / (2.0 - gamma_);
    return out;
  }

 private:
  int n_;
  double gamma_;
  std::vector<double> spectrum_;
};

inline FrostmanEnergy measure_energy(const GridField& density, double gamma) {
  return EnergyKernel(density.size(), gamma).energy(density);
}

/// gamma-energy of mu_n.
inline FrostmanEnergy frostman_energy(const GridField& g, double y, double n, const EnergyKernel& kernel) {
  detail::require_resolved(g, n);
  return kernel.energy(GridField(g.size(), detail::frostman_density(g, y, n)));
}

inline FrostmanEnergy frostman_energy(const GridField& g, double y, double n, double gamma) {
  if (!(gamma < 2.0)) throw ParameterError("Frostman energy requires gamma < 2 (gamma = " + std::to_string(gamma) + ")");
  return frostman_energy(g, y, n, EnergyKernel(g.size(), gamma));
}

// ---------------------------------------------------------------------------

/// Fraction of grid points with |g| <= eps.
inline double occupation_fraction(const GridField& g, double eps) {
  if (!(eps > 0.0)) throw ParameterError("occupation fraction requires eps > 0");
  size_t c = 0;
  for (double v : g.values()) c += std::abs(v) <= eps ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(g.values().size());
}

struct DeterminantSurvey {
  std::vector<double> distances;
  std::vector<double> ratios;  // det(q) / |x - x'|_T^{2 (alpha + delta - 1)}
  double min_ratio = 0.0;
  double median_ratio = 0.0;
  double max_ratio = 0.0;
};

/// det(q_{xx'}) over uniformly random point pairs. The pairs depend only on
/// the seed, so surveys at different cutoffs see the same points.
inline DeterminantSurvey covariance_det_check(const ModelParams& p, double t, int n_pairs, int cutoff,
                                              const SeedSpec& seed) {
  if (n_pairs < 1) throw ParameterError("covariance_det_check requires n_pairs >= 1");
  DeterminantSurvey out;
  const double expo = p.structure_exponent();
  const ModeWeights weights = mode_weights(t, p, cutoff);
  for (int q = 0; q < n_pairs; ++q) {
    const auto a = seed.uniforms(Stream::point_pairs, static_cast<std::uint32_t>(q), 0);
    const auto b = seed.uniforms(Stream::point_pairs, static_cast<std::uint32_t>(q), 1);
    const double x1 = -kPi + kTwoPi * a[0], x2 = -kPi + kTwoPi * a[1];
    const double y1 = -kPi + kTwoPi * b[0], y2 = -kPi + kTwoPi * b[1];
    const double dist = torus_norm(x1 - y1, x2 - y2);
    if (dist == 0.0) continue;
    const auto cov = two_point_covariance(x1, x2, y1, y2, weights);
    out.distances.push_back(dist);
    out.ratios.push_back(cov.det / std::pow(dist, expo));
  }
  std::vector<double> sorted = out.ratios;
  std::sort(sorted.begin(), sorted.end());
  out.min_ratio = sorted.front();
  out.max_ratio = sorted.back();
  out.median_ratio = sorted[sorted.size() / 2];
  return out;
}

}  // namespace levelset
