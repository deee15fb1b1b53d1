#pragma once

// Real sine/cosine spectral representation on the torus [-pi, pi]^2.
//
// A field is sum_k f_k e_k(x) over the punctured lattice, where
//   e_k = c sin(k.x) for k in Z+ = {k2 > 0} u {k1 > 0, k2 = 0},
//   e_k = c cos(k.x) for k in Z- = -Z+,        c = sqrt(2) / (2 pi).
// The complex conjugate-symmetric form only appears inside GridTransform.

#include <algorithm>
#include <cmath>
#include <compare>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "levelset/errors.hpp"
#include "levelset/fft.hpp"

namespace levelset {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Normalization of the orthonormal basis e_k.
inline constexpr double kBasisNorm = std::numbers::sqrt2 / (2.0 * std::numbers::pi);

struct WaveVector {
  int k1 = 0;
  int k2 = 0;

  constexpr std::int64_t norm2() const {
    return std::int64_t{k1} * k1 + std::int64_t{k2} * k2;
  }
  double norm() const { return std::sqrt(static_cast<double>(norm2())); }
  /// Membership in Z+; the origin belongs to neither half.
  constexpr bool positive() const { return k2 > 0 || (k2 == 0 && k1 > 0); }
  constexpr bool is_zero() const { return k1 == 0 && k2 == 0; }
  constexpr WaveVector operator-() const { return {-k1, -k2}; }
  double dot(double x1, double x2) const { return k1 * x1 + k2 * x2; }

  constexpr auto operator<=>(const WaveVector&) const = default;
};

/// e_k evaluated at a point.
inline double basis(WaveVector k, double x1, double x2) {
  const double phase = k.dot(x1, x2);
  return k.positive() ? kBasisNorm * std::sin(phase) : kBasisNorm * std::cos(phase);
}

enum class Truncation { ball, square };

inline std::string to_string(Truncation t) { return t == Truncation::ball ? "ball" : "square"; }

inline Truncation parse_truncation(const std::string& s) {
  if (s == "ball") return Truncation::ball;
  if (s == "square") return Truncation::square;
  throw FormatError("unknown truncation shape '" + s + "' (expected ball|square)");
}

/// Lattice modes with |k| <= N (ball) or |k|_inf <= N (square), origin removed,
/// sorted lexicographically by (k1, k2).
class ModeSet {
 public:
  ModeSet(int radius, Truncation shape) : radius_(radius), shape_(shape) {
    if (radius < 1) throw ParameterError("truncation radius must be >= 1");
    const int side = 2 * radius + 1;
    lookup_.assign(static_cast<size_t>(side) * side, -1);
    for (int k1 = -radius; k1 <= radius; ++k1) {
      for (int k2 = -radius; k2 <= radius; ++k2) {
        const WaveVector k{k1, k2};
        if (!admits(k, radius, shape)) continue;
        lookup_[slot(k)] = static_cast<int>(modes_.size());
        modes_.push_back(k);
      }
    }
    negated_.resize(modes_.size());
    for (size_t i = 0; i < modes_.size(); ++i) {
      negated_[i] = static_cast<size_t>(lookup_[slot(-modes_[i])]);
    }
  }

  static std::shared_ptr<const ModeSet> make(int radius, Truncation shape = Truncation::ball) {
    return std::make_shared<const ModeSet>(radius, shape);
  }

  static bool admits(WaveVector k, int radius, Truncation shape) {
    if (k.is_zero()) return false;
    if (shape == Truncation::ball) return k.norm2() <= std::int64_t{radius} * radius;
    return std::abs(k.k1) <= radius && std::abs(k.k2) <= radius;
  }

  int radius() const { return radius_; }
  Truncation shape() const { return shape_; }
  size_t size() const { return modes_.size(); }
  std::span<const WaveVector> modes() const { return modes_; }
  const WaveVector& operator[](size_t i) const { return modes_[i]; }

  std::ptrdiff_t index_of(WaveVector k) const {
    if (std::abs(k.k1) > radius_ || std::abs(k.k2) > radius_) return -1;
    return lookup_[slot(k)];
  }
  bool contains(WaveVector k) const { return index_of(k) >= 0; }
  /// Index of -k for the mode stored at index i.
  size_t negated(size_t i) const { return negated_[i]; }

  bool operator==(const ModeSet& o) const { return radius_ == o.radius_ && shape_ == o.shape_; }

 private:
  size_t slot(WaveVector k) const {
    const int side = 2 * radius_ + 1;
    return static_cast<size_t>(k.k1 + radius_) * side + static_cast<size_t>(k.k2 + radius_);
  }

  int radius_;
  Truncation shape_;
  std::vector<WaveVector> modes_;
  std::vector<int> lookup_;
  std::vector<size_t> negated_;
};

using ModeSetPtr = std::shared_ptr<const ModeSet>;

class SpectralField {
 public:
  explicit SpectralField(ModeSetPtr modes)
      : modes_(std::move(modes)), coeffs_(modes_->size(), 0.0) {}
  SpectralField(ModeSetPtr modes, std::vector<double> coeffs)
      : modes_(std::move(modes)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != modes_->size()) {
      throw FormatError("coefficient count does not match mode set");
    }
  }

  const ModeSet& modes() const { return *modes_; }
  const ModeSetPtr& mode_set() const { return modes_; }
  size_t size() const { return coeffs_.size(); }

  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }

  double coeff(WaveVector k) const {
    const auto i = modes_->index_of(k);
    return i < 0 ? 0.0 : coeffs_[static_cast<size_t>(i)];
  }
  void set(WaveVector k, double value) {
    const auto i = modes_->index_of(k);
    if (i < 0) throw ResolutionError("mode outside the field's truncation set");
    coeffs_[static_cast<size_t>(i)] = value;
  }

  /// Sobolev norm sum |k|^{2 gamma} f_k^2, square-rooted.
  double norm(double gamma = 0.0) const {
    double s = 0.0;
    for (size_t i = 0; i < coeffs_.size(); ++i) {
      const double w = gamma == 0.0 ? 1.0 : std::pow(static_cast<double>((*modes_)[i].norm2()), gamma);
      s += w * coeffs_[i] * coeffs_[i];
    }
    return std::sqrt(s);
  }

  /// Pointwise evaluation by direct summation; O(modes).
  double operator()(double x1, double x2) const {
    double s = 0.0;
    for (size_t i = 0; i < coeffs_.size(); ++i) {
      if (coeffs_[i] != 0.0) s += coeffs_[i] * basis((*modes_)[i], x1, x2);
    }
    return s;
  }

  bool operator==(const SpectralField& o) const {
    return *modes_ == *o.modes_ && coeffs_ == o.coeffs_;
  }

 private:
  ModeSetPtr modes_;
  std::vector<double> coeffs_;
};

/// L2 inner product; both fields must share a mode set.
inline double inner(const SpectralField& a, const SpectralField& b) {
  if (!(a.modes() == b.modes())) throw ResolutionError("inner product of fields on different mode sets");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a.coeffs()[i] * b.coeffs()[i];
  return s;
}

/// Uniform N x N samples, row-major, values[i * N + j] at
/// x = (-pi + 2 pi i / N, -pi + 2 pi j / N).
class GridField {
 public:
  explicit GridField(int n) : n_(n), values_(static_cast<size_t>(n) * n, 0.0) { check(n); }
  GridField(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
    check(n);
    if (values_.size() != static_cast<size_t>(n) * n) throw FormatError("grid value count mismatch");
  }

  int size() const { return n_; }
  double spacing() const { return kTwoPi / n_; }
  static double coordinate(int i, int n) { return -kPi + kTwoPi * i / n; }
  double coordinate(int i) const { return coordinate(i, n_); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double& operator()(int i, int j) { return values_[static_cast<size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return values_[static_cast<size_t>(i) * n_ + j]; }
  /// Periodic access.
  double wrapped(int i, int j) const {
    i %= n_;
    j %= n_;
    if (i < 0) i += n_;
    if (j < 0) j += n_;
    return (*this)(i, j);
  }

  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  bool operator==(const GridField&) const = default;

 private:
  static void check(int n) {
    if (n < 2 || (n & (n - 1)) != 0) throw ResolutionError("grid resolution must be a power of two >= 2");
  }

  int n_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Spectral operators

inline SpectralField apply_fractional_laplacian(const SpectralField& f, double gamma) {
  SpectralField out = f;
  if (gamma == 0.0) return out;
  auto c = out.coeffs();
  for (size_t i = 0; i < c.size(); ++i) {
    c[i] *= std::pow(static_cast<double>(f.modes()[i].norm2()), gamma);
  }
  return out;
}

/// Zero every coefficient outside the truncation set of radius n; the mode
/// set is kept so the result composes with f.
inline SpectralField project(const SpectralField& f, int n, Truncation shape = Truncation::ball) {
  if (n < 1) throw ParameterError("projection radius must be >= 1");
  SpectralField out = f;
  auto c = out.coeffs();
  for (size_t i = 0; i < c.size(); ++i) {
    if (!ModeSet::admits(f.modes()[i], n, shape)) c[i] = 0.0;
  }
  return out;
}

/// Re-express f on another mode set; modes not present in `target` are dropped.
inline SpectralField restrict_to(const SpectralField& f, ModeSetPtr target) {
  SpectralField out(std::move(target));
  auto c = out.coeffs();
  for (size_t i = 0; i < c.size(); ++i) c[i] = f.coeff(out.modes()[i]);
  return out;
}

/// d/dx_j. Mode k feeds mode -k: (d_j f)_m = -m_j f_{-m}.
inline SpectralField partial(const SpectralField& f, int j) {
  SpectralField out(f.mode_set());
  auto c = out.coeffs();
  const auto& ms = f.modes();
  for (size_t i = 0; i < c.size(); ++i) {
    const int mj = j == 0 ? ms[i].k1 : ms[i].k2;
    c[i] = -mj * f.coeffs()[ms.negated(i)];
  }
  return out;
}

/// Divergence of a vector field given by its two spectral components.
inline SpectralField divergence(const SpectralField& u1, const SpectralField& u2) {
  SpectralField out = partial(u1, 0);
  const SpectralField d2 = partial(u2, 1);
  for (size_t i = 0; i < out.size(); ++i) out.coeffs()[i] += d2.coeffs()[i];
  return out;
}

/// Velocity u = grad_perp psi with grad_perp = (-d2, d1), stored through its
/// stream function. Component m of u is psi_{-m} (m2, -m1), so transversality
/// m.u_m is an integer identity times psi and vanishes exactly.
class SpectralVelocity {
 public:
  explicit SpectralVelocity(SpectralField stream) : stream_(std::move(stream)) {}

  const SpectralField& stream() const { return stream_; }

  SpectralField component(int j) const {
    SpectralField out(stream_.mode_set());
    const auto& ms = stream_.modes();
    for (size_t i = 0; i < out.size(); ++i) {
      const double psi = stream_.coeffs()[ms.negated(i)];
      out.coeffs()[i] = j == 0 ? ms[i].k2 * psi : -ms[i].k1 * psi;
    }
    return out;
  }

  /// max_m |m . u_m|, evaluated with the direction vector kept in integers.
  double max_transversality() const {
    double worst = 0.0;
    const auto& ms = stream_.modes();
    for (size_t i = 0; i < stream_.size(); ++i) {
      const WaveVector m = ms[i];
      const std::int64_t dir_dot = std::int64_t{m.k1} * m.k2 - std::int64_t{m.k2} * m.k1;
      worst = std::max(worst, std::abs(static_cast<double>(dir_dot) * stream_.coeffs()[ms.negated(i)]));
    }
    return worst;
  }

 private:
  SpectralField stream_;
};

/// u = grad_perp A^{-M} theta.
inline SpectralVelocity perp_gradient_inverse(const SpectralField& theta, double m_exponent) {
  return SpectralVelocity(apply_fractional_laplacian(theta, -m_exponent));
}

// ---------------------------------------------------------------------------
// Grid transforms

/// Precomputed mapping between a mode set and the half-complex FFT layout of
/// an N x N grid. Cheap to copy relative to a transform; reuse it in loops.
class GridTransform {
 public:
  GridTransform(ModeSetPtr modes, int grid) : modes_(std::move(modes)), grid_(grid) {
    GridField probe(grid);  // validates power of two
    (void)probe;
    int widest = 0;
    for (const auto& k : modes_->modes()) widest = std::max({widest, std::abs(k.k1), std::abs(k.k2)});
    if (grid < 2 * widest + 2) {
      throw ResolutionError("grid " + std::to_string(grid) + " under-resolves modes up to |k_i| = " +
                            std::to_string(widest) + " (need grid >= " + std::to_string(2 * widest + 2) + ")");
    }
    const int half = grid / 2 + 1;
    const auto& ms = *modes_;
    for (size_t i = 0; i < ms.size(); ++i) {
      const WaveVector k = ms[i];
      if (!k.positive()) continue;
      Entry e;
      e.pos = i;
      e.neg = ms.negated(i);
      const int row = ((k.k1 % grid) + grid) % grid;
      e.slot = static_cast<size_t>(row) * half + static_cast<size_t>(k.k2);
      if (k.k2 == 0) {
        const int crow = ((-k.k1 % grid) + grid) % grid;
        e.conj_slot = static_cast<std::ptrdiff_t>(static_cast<size_t>(crow) * half);
      }
      e.sign = ((k.k1 + k.k2) % 2 == 0) ? 1.0 : -1.0;
      entries_.push_back(e);
    }
  }

  const ModeSetPtr& mode_set() const { return modes_; }
  int grid() const { return grid_; }

  /// Fill plan.real() with the grid values of the coefficients.
  void synthesize_into(std::span<const double> coeffs, fft::RealPlan2d& plan) const {
    auto spec = plan.spectrum();
    std::fill(spec.begin(), spec.end(), std::complex<double>{});
    const double scale = 0.5 * kBasisNorm;
    for (const auto& e : entries_) {
      const std::complex<double> v(scale * e.sign * coeffs[e.neg], -scale * e.sign * coeffs[e.pos]);
      spec[e.slot] = v;
      if (e.conj_slot >= 0) spec[static_cast<size_t>(e.conj_slot)] = std::conj(v);
    }
    plan.backward();
  }

  /// Read coefficients from the grid values currently in plan.real().
  void analyze_from(fft::RealPlan2d& plan, std::span<double> coeffs) const {
    plan.forward();
    auto spec = plan.spectrum();
    const double scale = 2.0 / (kBasisNorm * static_cast<double>(grid_) * grid_);
    std::fill(coeffs.begin(), coeffs.end(), 0.0);
    for (const auto& e : entries_) {
      const std::complex<double> v = spec[e.slot] * (e.sign * scale);
      coeffs[e.pos] = -v.imag();
      coeffs[e.neg] = v.real();
    }
  }

  GridField synthesize(const SpectralField& f) const {
    require_same(f);
    auto& plan = fft::workspace(grid_);
    synthesize_into(f.coeffs(), plan);
    auto r = plan.real();
    return GridField(grid_, std::vector<double>(r.begin(), r.end()));
  }

  SpectralField analyze(const GridField& g) const {
    if (g.size() != grid_) throw ResolutionError("grid resolution does not match transform");
    auto& plan = fft::workspace(grid_);
    std::copy(g.values().begin(), g.values().end(), plan.real().begin());
    SpectralField out(modes_);
    analyze_from(plan, out.coeffs());
    return out;
  }

 private:
  struct Entry {
    size_t pos = 0;  // index of k in Z+
    size_t neg = 0;  // index of -k
    size_t slot = 0;
    std::ptrdiff_t conj_slot = -1;
    double sign = 1.0;  // (-1)^{k1+k2}: grid origin sits at (-pi, -pi)
  };

  void require_same(const SpectralField& f) const {
    if (!(f.modes() == *modes_)) throw ResolutionError("field mode set does not match transform");
  }

  ModeSetPtr modes_;
  int grid_;
  std::vector<Entry> entries_;
};

inline GridField synthesize(const SpectralField& f, int grid) {
  return GridTransform(f.mode_set(), grid).synthesize(f);
}

inline SpectralField analyze(const GridField& g, ModeSetPtr modes) {
  return GridTransform(std::move(modes), g.size()).analyze(g);
}

}  // namespace levelset
