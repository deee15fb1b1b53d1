#pragma once

// The linear stochastic convolution dz + nu A^alpha z dt = C^{1/2} dW, z(0) = 0.
// Each mode is an independent Ornstein-Uhlenbeck process, so both sampling
// and the fixed-time statistics are available in closed form.

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "levelset/noise.hpp"
#include "levelset/spectral.hpp"

namespace levelset {

struct ModelParams {
  double nu = 1.0;
  double alpha = 1.5;
  double m_exponent = 1.0;  // M in u = grad_perp A^{-M} theta
  NoiseSpec noise{};

  /// Hoelder exponent alpha + delta - 1 of the fixed-time field.
  double hoelder() const { return alpha + noise.delta - 1.0; }
  /// Predicted level-set dimension 3 - alpha - delta.
  double target_dimension() const { return 3.0 - alpha - noise.delta; }
  /// Structure-function exponent 2(alpha + delta - 1).
  double structure_exponent() const { return 2.0 * hoelder(); }

  /// Checks the constraints of the linear theory. Throws ParameterError
  /// naming the violated inequality.
  void validate() const {
    auto fail = [](const std::string& what) { throw ParameterError(what); };
    if (!(nu > 0.0)) fail("nu > 0 violated (nu = " + num(nu) + ")");
    if (!(alpha >= 1.0)) fail("alpha >= 1 violated (alpha = " + num(alpha) + ")");
    if (!(m_exponent >= 1.0)) fail("M >= 1 violated (M = " + num(m_exponent) + ")");
    if (!(noise.amplitude > 0.0)) fail("noise amplitude > 0 violated");
    const double lo = 1.0 - alpha, hi = 2.0 - alpha;
    if (!(noise.delta > lo && noise.delta < hi)) {
      fail("delta in (1-alpha, 2-alpha) = (" + num(lo) + ", " + num(hi) + ") violated (delta = " +
           num(noise.delta) + ")");
    }
  }

 private:
  static std::string num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }
};

/// Damping rate nu |k|^{2 alpha}.
inline double decay_rate(WaveVector k, const ModelParams& p) {
  return p.nu * std::pow(static_cast<double>(k.norm2()), p.alpha);
}

/// a_k(t)^2 = sigma_k^2 (1 - e^{-2 nu |k|^{2a} t}) / (2 nu |k|^{2a}).
inline double mode_variance(WaveVector k, double t, const ModelParams& p) {
  const double lambda = decay_rate(k, p);
  const double s = sigma(k, p.noise);
  if (std::isinf(t)) return s * s / (2.0 * lambda);
  return s * s * -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
}

inline double stationary_mode_variance(WaveVector k, const ModelParams& p) {
  return mode_variance(k, std::numeric_limits<double>::infinity(), p);
}

/// Exact fixed-time law: independent N(0, a_k(t)^2) coefficients. The
/// stationary flag replaces a_k(t)^2 with its t -> infinity limit.
inline SpectralField sample_exact(double t, const ModeSetPtr& modes, const ModelParams& p, const SeedSpec& seed,
                                  bool stationary = false) {
  if (!(t > 0.0)) throw ParameterError("exact sampling requires t > 0");
  SpectralField out(modes);
  for (size_t i = 0; i < out.size(); ++i) {
    const WaveVector k = (*modes)[i];
    const double var = stationary ? stationary_mode_variance(k, p) : mode_variance(k, t, p);
    out.coeffs()[i] = std::sqrt(var) * seed.normal(Stream::exact_sample, 0, k);
  }
  return out;
}

/// One exact OU transition of length dt. `step` selects the increment
/// stream, shared with the nonlinear integrator so the two agree draw for draw.
inline SpectralField evolve_exact(const SpectralField& z, double dt, const ModelParams& p, const SeedSpec& seed,
                                  std::uint32_t step) {
  if (!(dt > 0.0)) throw ParameterError("evolve_exact requires dt > 0");
  SpectralField out(z.mode_set());
  const auto& ms = z.modes();
  for (size_t i = 0; i < out.size(); ++i) {
    const WaveVector k = ms[i];
    const double decay = std::exp(-decay_rate(k, p) * dt);
    const double noise = std::sqrt(mode_variance(k, dt, p)) * seed.normal(Stream::increment, step, k);
    out.coeffs()[i] = decay * z.coeffs()[i] + noise;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analytic series. All of them truncate at |k| <= cutoff and report a
// rigorous bound on the discarded tail.

struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;
  bool divergent = false;
};

namespace detail {

/// Upper bound on sum_{k in Z^2, |k| > R} |k|^{-s}, s > 2, from comparison
/// with the integral over |x| >= R - sqrt(2)/2 of (|x| - sqrt(2)/2)^{-s}.
inline double lattice_tail_bound(double radius, double s) {
  const double a = std::numbers::sqrt2 / 2.0;
  const double u = radius - 2.0 * a;
  if (!(s > 2.0)) return std::numeric_limits<double>::infinity();
  if (u <= 0.0) return std::numeric_limits<double>::infinity();
  return kTwoPi * (std::pow(u, 2.0 - s) / (s - 2.0) + a * std::pow(u, 1.0 - s) / (s - 1.0));
}

template <class Fn>
void for_each_in_ball(int cutoff, Fn&& fn) {
  const std::int64_t r2 = std::int64_t{cutoff} * cutoff;
  for (int k1 = -cutoff; k1 <= cutoff; ++k1) {
    for (int k2 = -cutoff; k2 <= cutoff; ++k2) {
      const WaveVector k{k1, k2};
      if (k.is_zero() || k.norm2() > r2) continue;
      fn(k);
    }
  }
}

/// Bound on sum over |k| > cutoff of sigma_k^2 / (2 nu |k|^{2 alpha}) for the
/// power-law noise; the (1 - e^{...}) factor is <= 1.
inline double variance_tail(int cutoff, const ModelParams& p) {
  const double s = 2.0 * (p.alpha + p.noise.delta);
  return p.noise.amplitude * p.noise.amplitude / (2.0 * p.nu) * lattice_tail_bound(cutoff, s);
}

}  // namespace detail

/// sigma_t^2 = sum (1 - e^{-2 nu |k|^{2a} t}) sigma_k^2 / (4 nu |k|^{2 alpha}).
/// With unit amplitude this is the displayed series sum (1-e^{..})/(4 nu |k|^{2(a+d)});
/// the pointwise variance of z_t equals c^2 sigma_t^2, see point_variance().
inline SeriesValue sigma_t_squared(double t, const ModelParams& p, int cutoff) {
  if (cutoff < 1) throw ParameterError("series cutoff must be >= 1");
  SeriesValue out;
  if (!(2.0 * (p.alpha + p.noise.delta) > 2.0)) {
    out.divergent = true;
    out.tail_bound = std::numeric_limits<double>::infinity();
  }
  double s = 0.0;
  detail::for_each_in_ball(cutoff, [&](WaveVector k) { s += 0.5 * mode_variance(k, t, p); });
  out.value = s;
  if (!out.divergent) out.tail_bound = 0.5 * detail::variance_tail(cutoff, p);
  return out;
}

/// E|z_t(x)|^2 = sum_{Z*} a_k^2 e_k(x)^2, independent of x.
inline SeriesValue point_variance(double t, const ModelParams& p, int cutoff) {
  SeriesValue s = sigma_t_squared(t, p, cutoff);
  const double c2 = kBasisNorm * kBasisNorm;
  return {s.value * c2, s.tail_bound * c2, s.divergent};
}

/// g_t(r) = E|z_t(x + r) - z_t(x)|^2 = sum_{Z*} 2 c^2 a_k(t)^2 sin^2(k.r / 2).
inline SeriesValue structure_function_analytic(double r1, double r2, double t, const ModelParams& p, int cutoff) {
  if (cutoff < 1) throw ParameterError("series cutoff must be >= 1");
  SeriesValue out;
  if (r1 == 0.0 && r2 == 0.0) return out;
  const double c2 = kBasisNorm * kBasisNorm;
  double s = 0.0;
  detail::for_each_in_ball(cutoff, [&](WaveVector k) {
    const double h = std::sin(0.5 * k.dot(r1, r2));
    s += mode_variance(k, t, p) * h * h;
  });
  out.value = 2.0 * c2 * s;
  out.tail_bound = 2.0 * c2 * detail::variance_tail(cutoff, p);
  return out;
}

struct TwoPointCovariance {
  double var_x = 0.0;
  double var_y = 0.0;
  double cov = 0.0;
  /// Determinant assembled from increment sums; exact cancellation of the
  /// naive var_x var_y - cov^2 is avoided for nearby points.
  double det = 0.0;
};

/// a_k(t)^2 tabulated over 0 < |k| <= cutoff, for repeated covariance queries.
struct ModeWeights {
  std::vector<WaveVector> modes;
  std::vector<double> a2;
};

inline ModeWeights mode_weights(double t, const ModelParams& p, int cutoff) {
  ModeWeights w;
  detail::for_each_in_ball(cutoff, [&](WaveVector k) {
    w.modes.push_back(k);
    w.a2.push_back(mode_variance(k, t, p));
  });
  return w;
}

/// Covariance of (z_t(x), z_t(y)) from sum a_k^2 e_k(x) e_k(y).
inline TwoPointCovariance two_point_covariance(double x1, double x2, double y1, double y2, const ModeWeights& w) {
  TwoPointCovariance q;
  // d = sum a^2 e(x) (e(x) - e(y)),  e = -sum a^2 e(y) (e(x) - e(y)),
  // det = cov * sum a^2 (e(x) - e(y))^2 + d e.
  double dx = 0.0, dy = 0.0, dd = 0.0;
  for (size_t i = 0; i < w.modes.size(); ++i) {
    const WaveVector k = w.modes[i];
    const double a2 = w.a2[i];
    const double px = k.dot(x1, x2), py = k.dot(y1, y2);
    const double ex = basis(k, x1, x2), ey = basis(k, y1, y2);
    // e(x) - e(y) through the sum-to-product identities.
    const double half_diff = std::sin(0.5 * (px - py));
    const double diff = k.positive() ? 2.0 * kBasisNorm * std::cos(0.5 * (px + py)) * half_diff
                                     : -2.0 * kBasisNorm * std::sin(0.5 * (px + py)) * half_diff;
    q.var_x += a2 * ex * ex;
    q.var_y += a2 * ey * ey;
    q.cov += a2 * ex * ey;
    dx += a2 * ex * diff;
    dy -= a2 * ey * diff;
    dd += a2 * diff * diff;
  }
  q.det = q.cov * dd + dx * dy;
  return q;
}

inline TwoPointCovariance two_point_covariance(double x1, double x2, double y1, double y2, double t,
                                               const ModelParams& p, int cutoff) {
  if (!(t > 0.0)) throw ParameterError("two_point_covariance requires t > 0");
  return two_point_covariance(x1, x2, y1, y2, mode_weights(t, p, cutoff));
}

}  // namespace levelset
