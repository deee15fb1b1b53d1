#pragma once

// Homogeneous noise covariance C e_k = sigma_k^2 e_k and counter-based
// Gaussian draws keyed on (master seed, replica, purpose, step, mode).

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>

#include "levelset/spectral.hpp"

namespace levelset {

struct NoiseSpec {
  double delta = 0.25;
  double amplitude = 1.0;
  /// Optional override of sigma_k. Not checked against the power-law bounds.
  std::function<double(WaveVector)> table;
};

inline double sigma(WaveVector k, const NoiseSpec& spec) {
  if (spec.table) return spec.table(k);
  return spec.amplitude * std::pow(static_cast<double>(k.norm2()), -0.5 * spec.delta);
}

// ---------------------------------------------------------------------------
// Philox4x32-10 (Salmon et al., SC'11).

namespace detail {

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Open-interval uniform from the top 52 of 64 random bits; both
/// endpoints 2^-53 and 1 - 2^-53 are representable.
inline double open_uniform(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace detail

/// Independent draw streams are separated by purpose so that, e.g., the
/// one-shot exact sampler never reuses time-step increments.
enum class Stream : std::uint32_t {
  increment = 0,
  exact_sample = 1,
  initial_condition = 2,
  point_pairs = 3,
  synthetic_set = 4,
};

struct SeedSpec {
  std::uint64_t master = 0;
  std::uint32_t replica = 0;

  /// Four uniform 32-bit words for the given counter tuple.
  std::array<std::uint32_t, 4> bits(Stream stream, std::uint32_t step, std::uint32_t tag) const {
    const std::array<std::uint32_t, 4> ctr{replica, step, static_cast<std::uint32_t>(stream), tag};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(master),
                                           static_cast<std::uint32_t>(master >> 32)};
    return detail::philox4x32(ctr, key);
  }

  /// Two open-interval uniforms.
  std::array<double, 2> uniforms(Stream stream, std::uint32_t step, std::uint32_t tag) const {
    const auto w = bits(stream, step, tag);
    return {detail::open_uniform((std::uint64_t{w[0]} << 32) | w[1]),
            detail::open_uniform((std::uint64_t{w[2]} << 32) | w[3])};
  }

  /// Standard normal via Box-Muller (cosine branch).
  double normal(Stream stream, std::uint32_t step, std::uint32_t tag) const {
    const auto [u1, u2] = uniforms(stream, step, tag);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  double normal(Stream stream, std::uint32_t step, WaveVector k) const {
    return normal(stream, step, mode_tag(k));
  }

  static std::uint32_t mode_tag(WaveVector k) {
    return static_cast<std::uint32_t>(static_cast<std::uint16_t>(k.k1)) |
           (static_cast<std::uint32_t>(static_cast<std::uint16_t>(k.k2)) << 16);
  }

  bool operator==(const SeedSpec&) const = default;
};

/// Wiener increment C^{1/2} dW over dt: coefficient k ~ N(0, sigma_k^2 dt).
inline SpectralField sample_increment(const ModeSetPtr& modes, double dt, const NoiseSpec& spec,
                                      const SeedSpec& seed, std::uint32_t step = 0) {
  if (!(dt > 0.0)) throw ParameterError("increment requires dt > 0");
  SpectralField out(modes);
  const double root_dt = std::sqrt(dt);
  for (size_t i = 0; i < out.size(); ++i) {
    const WaveVector k = (*modes)[i];
    out.coeffs()[i] = sigma(k, spec) * root_dt * seed.normal(Stream::increment, step, k);
  }
  return out;
}

}  // namespace levelset
