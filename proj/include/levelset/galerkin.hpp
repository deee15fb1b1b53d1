#pragma once

// Galerkin truncation of d theta + (nu A^alpha theta + B(u, theta)) dt = C^{1/2} dW,
// u = grad_perp A^{-M} theta, integrated with a stochastic exponential Euler
// scheme whose linear part is the exact OU transition of each mode.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "levelset/linear.hpp"
#include "levelset/spectral.hpp"

namespace levelset {

struct SolverConfig {
  int radius = 85;  // truncation |k| <= radius
  int grid = 256;   // dealiasing grid
  double dt = 1e-3;
  double horizon = 1.0;
  Truncation shape = Truncation::ball;
  double guard = 1e6;
  int record_every = 10;
  bool nonlinear = true;

  int steps() const { return static_cast<int>(std::llround(horizon / dt)); }

  void validate() const {
    if (radius < 1) throw ParameterError("solver.N >= 1 violated");
    if (grid < 3 * radius) {
      throw ResolutionError("solver.grid >= 3 solver.N violated (grid = " + std::to_string(grid) +
                            ", N = " + std::to_string(radius) + ")");
    }
    if (!(dt > 0.0)) throw ParameterError("solver.dt > 0 violated");
    if (!(horizon >= dt)) throw ParameterError("solver.T >= solver.dt violated");
    if (!(guard > 0.0)) throw ParameterError("solver.guard > 0 violated");
    if (record_every < 1) throw ParameterError("solver.record_every >= 1 violated");
  }
};

/// Residuals of the two conservation identities, each divided by its
/// Cauchy-Schwarz scale.
struct ConservationResiduals {
  double energy = 0.0;  // |<theta, B_M(theta)>| / (|theta| |B|)
  double stream = 0.0;  // |<A^{-M} theta, B_M(theta)>| / (|theta| |B|_{-2M})
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> l2_norm;
  std::vector<double> hneg_norm;  // |theta|_{-M}
  std::vector<double> residual_energy;
  std::vector<double> residual_stream;
  SpectralField final_state;

  bool operator==(const TrajectoryRecord&) const = default;
};

/// Smooth random initial datum with the requested L2 norm.
inline SpectralField random_initial_condition(const ModeSetPtr& modes, double l2_norm, const SeedSpec& seed) {
  SpectralField out(modes);
  for (size_t i = 0; i < out.size(); ++i) {
    const WaveVector k = (*modes)[i];
    out.coeffs()[i] = seed.normal(Stream::initial_condition, 0, k) / static_cast<double>(k.norm2());
  }
  const double n = out.norm();
  if (n > 0.0) {
    for (double& c : out.coeffs()) c *= l2_norm / n;
  }
  return out;
}

class GalerkinSolver {
 public:
  /// `unsupported_regime` lifts the alpha > 1 requirement of the nonlinear theory.
  GalerkinSolver(ModelParams params, SolverConfig cfg, bool unsupported_regime = false)
      : params_(std::move(params)),
        cfg_((cfg.validate(), cfg)),
        modes_(ModeSet::make(cfg.radius, cfg.shape)),
        transform_(modes_, cfg.grid) {
    if (unsupported_regime) {
      if (!(params_.nu > 0.0)) throw ParameterError("nu > 0 violated");
    } else {
      params_.validate();
      if (!(params_.alpha > 1.0)) {
        throw ParameterError("alpha > 1 violated for the nonlinear problem (alpha = " +
                             std::to_string(params_.alpha) + ")");
      }
    }
    const auto& ms = *modes_;
    decay_.resize(ms.size());
    noise_std_.resize(ms.size());
    inv_power_.resize(ms.size());
    for (size_t i = 0; i < ms.size(); ++i) {
      decay_[i] = std::exp(-decay_rate(ms[i], params_) * cfg_.dt);
      noise_std_[i] = std::sqrt(mode_variance(ms[i], cfg_.dt, params_));
      inv_power_[i] = std::pow(static_cast<double>(ms[i].norm2()), -params_.m_exponent);
    }
  }

  const ModeSetPtr& modes() const { return modes_; }
  const ModelParams& params() const { return params_; }
  const SolverConfig& config() const { return cfg_; }

  /// pi_N B_M(theta) = pi_N div(u theta), products formed on the dealiasing grid.
  SpectralField nonlinear_term(const SpectralField& theta) const {
    require_modes(theta);
    SpectralField out(modes_);
    compute_nonlinear(theta.coeffs(), out.coeffs());
    return out;
  }

  ConservationResiduals residuals(const SpectralField& theta, const SpectralField& b) const {
    double tb = 0.0, psib = 0.0, bb = 0.0, bneg = 0.0;
    for (size_t i = 0; i < theta.size(); ++i) {
      const double bi = b.coeffs()[i];
      tb += theta.coeffs()[i] * bi;
      psib += inv_power_[i] * theta.coeffs()[i] * bi;
      bb += bi * bi;
      bneg += inv_power_[i] * inv_power_[i] * bi * bi;
    }
    const double tn = theta.norm();
    ConservationResiduals r;
    if (tn > 0.0 && bb > 0.0) {
      r.energy = std::abs(tb) / (tn * std::sqrt(bb));
      r.stream = std::abs(psib) / (tn * std::sqrt(bneg));
    }
    return r;
  }

  /// One exponential Euler-Maruyama step; `index` selects the noise draws.
  SpectralField step(const SpectralField& theta, const SeedSpec& seed, std::uint32_t index) const {
    require_modes(theta);
    SpectralField b(modes_);
    if (cfg_.nonlinear) compute_nonlinear(theta.coeffs(), b.coeffs());
    return advance(theta, b, seed, index);
  }

  TrajectoryRecord solve(const SpectralField& theta0, const SeedSpec& seed) const {
    SpectralField theta = restrict_to(theta0, modes_);
    TrajectoryRecord rec{{}, {}, {}, {}, {}, SpectralField(modes_)};
    const int n = cfg_.steps();
    SpectralField b(modes_);
    for (int s = 0; s <= n; ++s) {
      const bool record = s % cfg_.record_every == 0 || s == n;
      if (cfg_.nonlinear && (s < n || record)) compute_nonlinear(theta.coeffs(), b.coeffs());
      if (record) {
        const auto r = cfg_.nonlinear ? residuals(theta, b) : ConservationResiduals{};
        rec.times.push_back(s * cfg_.dt);
        rec.l2_norm.push_back(theta.norm());
        rec.hneg_norm.push_back(theta.norm(-params_.m_exponent));
        rec.residual_energy.push_back(r.energy);
        rec.residual_stream.push_back(r.stream);
      }
      if (s == n) break;
      theta = advance(theta, b, seed, static_cast<std::uint32_t>(s));
    }
    rec.final_state = std::move(theta);
    return rec;
  }

 private:
  void require_modes(const SpectralField& f) const {
    if (!(f.modes() == *modes_)) throw ResolutionError("field is not on the solver's truncation set");
  }

  SpectralField advance(const SpectralField& theta, const SpectralField& b, const SeedSpec& seed,
                        std::uint32_t index) const {
    SpectralField out(modes_);
    const auto& ms = *modes_;
    const auto th = theta.coeffs();
    const auto bc = b.coeffs();
    auto oc = out.coeffs();
    double norm2 = 0.0;
    for (size_t i = 0; i < ms.size(); ++i) {
      const double drift = cfg_.nonlinear ? th[i] - cfg_.dt * bc[i] : th[i];
      oc[i] = decay_[i] * drift + noise_std_[i] * seed.normal(Stream::increment, index, ms[i]);
      norm2 += oc[i] * oc[i];
    }
    const double norm = std::sqrt(norm2);
    if (!std::isfinite(norm) || norm > cfg_.guard) {
      throw NumericalError("solver instability at step " + std::to_string(index + 1) + ": |theta|_L2 = " +
                           std::to_string(norm) + " exceeds guard " + std::to_string(cfg_.guard) +
                           "; reduce dt (dt = " + std::to_string(cfg_.dt) + ")");
    }
    return out;
  }

  void compute_nonlinear(std::span<const double> theta, std::span<double> out) const {
    const auto& ms = *modes_;
    const size_t n = ms.size();
    std::vector<double> u1(n), u2(n);
    for (size_t i = 0; i < n; ++i) {
      const size_t j = ms.negated(i);
      const double psi = inv_power_[j] * theta[j];
      u1[i] = ms[i].k2 * psi;
      u2[i] = -ms[i].k1 * psi;
    }
    auto& p_theta = fft::workspace(cfg_.grid, 0);
    auto& p_u1 = fft::workspace(cfg_.grid, 1);
    auto& p_u2 = fft::workspace(cfg_.grid, 2);
    transform_.synthesize_into(theta, p_theta);
    transform_.synthesize_into(u1, p_u1);
    transform_.synthesize_into(u2, p_u2);
    const auto t = p_theta.real();
    auto w1 = p_u1.real();
    auto w2 = p_u2.real();
    for (size_t q = 0; q < t.size(); ++q) {
      w1[q] *= t[q];
      w2[q] *= t[q];
    }
    transform_.analyze_from(p_u1, u1);
    transform_.analyze_from(p_u2, u2);
    for (size_t i = 0; i < n; ++i) {
      const size_t j = ms.negated(i);
      out[i] = -ms[i].k1 * u1[j] - ms[i].k2 * u2[j];
    }
  }

  ModelParams params_;
  SolverConfig cfg_;
  ModeSetPtr modes_;
  GridTransform transform_;
  std::vector<double> decay_;
  std::vector<double> noise_std_;
  std::vector<double> inv_power_;
};

}  // namespace levelset
