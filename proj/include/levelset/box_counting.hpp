#pragma once

// Dyadic box counting over cell covers, the least-squares dimension
// estimator, and synthetic sets of known dimension for calibrating it.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "levelset/level_set.hpp"
#include "levelset/noise.hpp"

namespace levelset {

/// Box counts N_k for boxes of side 2 pi 2^{-k}.
struct BoxCountCurve {
  int grid = 0;
  std::vector<int> scales;
  std::vector<std::int64_t> counts;
};

inline int log2_exact(int n) { return std::countr_zero(static_cast<unsigned>(n)); }

/// Finest admissible scale: boxes hold at least 4 grid cells (2 x 2).
inline int finest_scale(int grid) { return log2_exact(grid) - 1; }
/// Coarsest admissible scale: box side at most a quarter of the domain.
inline constexpr int kCoarsestScale = 2;

inline BoxCountCurve box_count(const CellCover& cover, int k_min, int k_max) {
  if (k_min < 0 || k_max < k_min) throw ParameterError("box_count: need 0 <= k_min <= k_max");
  if (k_max > finest_scale(cover.grid)) {
    throw ResolutionError("box_count: scale k = " + std::to_string(k_max) + " needs grid >= 2^(k+1) = " +
                          std::to_string(1 << (k_max + 1)) + ", have " + std::to_string(cover.grid));
  }
  const int levels = log2_exact(cover.grid);
  BoxCountCurve out;
  out.grid = cover.grid;
  std::vector<std::uint8_t> hit;
  for (int k = k_min; k <= k_max; ++k) {
    const int shift = levels - k;
    const std::size_t side = std::size_t{1} << k;
    hit.assign(side * side, 0);
    std::int64_t count = 0;
    for (const std::uint32_t id : cover.cells) {
      const std::size_t i = (id / static_cast<std::uint32_t>(cover.grid)) >> shift;
      const std::size_t j = (id % static_cast<std::uint32_t>(cover.grid)) >> shift;
      auto& h = hit[i * side + j];
      if (!h) {
        h = 1;
        ++count;
      }
    }
    out.scales.push_back(k);
    out.counts.push_back(count);
  }
  return out;
}

/// Box counts over the full admissible window [2, log2(grid) - 1].
inline BoxCountCurve box_count(const CellCover& cover) {
  return box_count(cover, kCoarsestScale, finest_scale(cover.grid));
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double residual_rms = 0.0;
  double max_residual = 0.0;
};

/// Ordinary least squares y = a + b x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  fit.residual_rms = std::sqrt(ssr / n);
  fit.stderr_slope = x.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return fit;
}

struct DimensionEstimate {
  double slope = 0.0;
  double stderr_slope = 0.0;
  int k_min = 0;
  int k_max = 0;
  int scales_used = 0;
  double residual_rms = 0.0;
};

/// Slope of log N_k against k log 2 over the fixed window
/// [2, log2(grid) - 1], restricted to scales with N_k > 0.
inline DimensionEstimate estimate_dimension(const BoxCountCurve& curve) {
  const int lo = kCoarsestScale, hi = finest_scale(curve.grid);
  std::vector<double> x, y;
  DimensionEstimate est;
  est.k_min = hi + 1;
  est.k_max = lo - 1;
  for (size_t i = 0; i < curve.scales.size(); ++i) {
    const int k = curve.scales[i];
    if (k < lo || k > hi || curve.counts[i] <= 0) continue;
    x.push_back(k * std::numbers::ln2);
    y.push_back(std::log(static_cast<double>(curve.counts[i])));
    est.k_min = std::min(est.k_min, k);
    est.k_max = std::max(est.k_max, k);
  }
  if (x.size() < 4) {
    throw NumericalError("estimate_dimension: " + std::to_string(x.size()) +
                         " usable scales in window, need at least 4");
  }
  const LinearFit fit = least_squares(x, y);
  est.slope = fit.slope;
  est.stderr_slope = fit.stderr_slope;
  est.scales_used = static_cast<int>(x.size());
  est.residual_rms = fit.residual_rms;
  return est;
}

// ---------------------------------------------------------------------------
// Synthetic sets

namespace synthetic {

/// Row of cells at x2 = const.
inline CellCover horizontal_line(int grid, double x2) {
  CellCover c;
  c.grid = grid;
  const double h = kTwoPi / grid;
  long j = static_cast<long>(std::floor((x2 + kPi) / h));
  j = ((j % grid) + grid) % grid;
  for (int i = 0; i < grid; ++i) c.cells.push_back(static_cast<std::uint32_t>(i * grid + j));
  c.normalize();
  return c;
}

/// Every cell of the torus.
inline CellCover full_torus(int grid) {
  CellCover c;
  c.grid = grid;
  c.cells.resize(static_cast<size_t>(grid) * grid);
  std::iota(c.cells.begin(), c.cells.end(), 0u);
  return c;
}

/// Axis-aligned filled square of `side` cells with lower corner at cell (i0, j0).
inline CellCover filled_square(int grid, int side, int i0 = 0, int j0 = 0) {
  CellCover c;
  c.grid = grid;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const int wi = (i0 + i) % grid, wj = (j0 + j) % grid;
      c.cells.push_back(static_cast<std::uint32_t>(wi * grid + wj));
    }
  }
  c.normalize();
  return c;
}

namespace detail {
inline void koch(Point a, Point b, int depth, std::vector<Segment>& out) {
  if (depth == 0) {
    out.push_back({a, b, 0});
    return;
  }
  const double dx = (b.x1 - a.x1) / 3.0, dy = (b.x2 - a.x2) / 3.0;
  const Point p1{a.x1 + dx, a.x2 + dy};
  const Point p3{a.x1 + 2 * dx, a.x2 + 2 * dy};
  const double c = 0.5, s = std::sqrt(3.0) / 2.0;
  const Point p2{p1.x1 + c * dx - s * dy, p1.x2 + s * dx + c * dy};
  koch(a, p1, depth - 1, out);
  koch(p1, p2, depth - 1, out);
  koch(p2, p3, depth - 1, out);
  koch(p3, b, depth - 1, out);
}
}  // namespace detail

/// Triadic Koch curve spanning the torus horizontally, so its endpoints are
/// identified and the curve is closed. Dimension log 4 / log 3.
inline std::vector<Segment> koch_curve(int iterations, Point offset = {}) {
  std::vector<Segment> segs;
  detail::koch({-kPi + offset.x1, offset.x2}, {kPi + offset.x1, offset.x2}, iterations, segs);
  return segs;
}

/// Random Cantor dust: each kept square splits 4 x 4 and keeps 8 of the 16
/// children at random, `levels` times. Dimension log 8 / log 4 = 3/2.
/// The result lives on a grid of 4^levels cells per side, translated by
/// (shift_i, shift_j) cells and then refined to `grid` (>= 4^levels).
inline CellCover cantor_dust(int grid, int levels, const SeedSpec& seed, int shift_i = 0, int shift_j = 0) {
  const int base = 1 << (2 * levels);
  if (grid < base || grid % base != 0) throw ResolutionError("cantor_dust: grid must be a multiple of 4^levels");
  std::vector<std::pair<int, int>> kept{{0, 0}};
  std::uint32_t draw = 0;
  for (int level = 0; level < levels; ++level) {
    std::vector<std::pair<int, int>> next;
    for (const auto& [i, j] : kept) {
      std::array<int, 16> order{};
      std::iota(order.begin(), order.end(), 0);
      // Fisher-Yates on counter-based uniforms.
      for (int m = 15; m > 0; --m) {
        const double u = seed.uniforms(Stream::synthetic_set, draw++, 0)[0];
        std::swap(order[m], order[static_cast<int>(u * (m + 1))]);
      }
      for (int m = 0; m < 8; ++m) next.emplace_back(4 * i + order[m] / 4, 4 * j + order[m] % 4);
    }
    kept = std::move(next);
  }
  const int refine = grid / base;
  CellCover c;
  c.grid = grid;
  for (const auto& [i, j] : kept) {
    for (int a = 0; a < refine; ++a) {
      for (int b = 0; b < refine; ++b) {
        const int wi = ((i * refine + a + shift_i) % grid + grid) % grid;
        const int wj = ((j * refine + b + shift_j) % grid + grid) % grid;
        c.cells.push_back(static_cast<std::uint32_t>(wi * grid + wj));
      }
    }
  }
  c.normalize();
  return c;
}

}  // namespace synthetic

struct CalibrationResult {
  std::string name;
  double theoretical = 0.0;
  double mean_slope = 0.0;
  double min_slope = 0.0;
  double max_slope = 0.0;
  int placements = 0;
};

/// Estimator on sets of known dimension, each averaged over random
/// placements on the grid.
inline std::vector<CalibrationResult> calibrate_estimator(int grid = 512, int placements = 16,
                                                          std::uint64_t master_seed = 20130819) {
  std::vector<CalibrationResult> out;
  auto run = [&](const std::string& name, double theory, auto&& make_cover) {
    CalibrationResult r;
    r.name = name;
    r.theoretical = theory;
    r.placements = placements;
    r.min_slope = 1e300;
    r.max_slope = -1e300;
    double sum = 0.0;
    for (int p = 0; p < placements; ++p) {
      const SeedSpec seed{master_seed, static_cast<std::uint32_t>(p)};
      const auto u = seed.uniforms(Stream::synthetic_set, 0xFFFFFFFFu, 0);
      const double slope = estimate_dimension(box_count(make_cover(seed, u))).slope;
      sum += slope;
      r.min_slope = std::min(r.min_slope, slope);
      r.max_slope = std::max(r.max_slope, slope);
    }
    r.mean_slope = sum / placements;
    out.push_back(r);
  };
  run("line", 1.0, [&](const SeedSpec&, std::array<double, 2> u) {
    return synthetic::horizontal_line(grid, -kPi + kTwoPi * u[1]);
  });
  run("koch", std::log(4.0) / std::log(3.0), [&](const SeedSpec&, std::array<double, 2> u) {
    return rasterize(synthetic::koch_curve(5, {kTwoPi * u[0], kTwoPi * u[1] - kPi}), grid);
  });
  // The dust is built on the dyadic box lattice; placements vary its random pattern.
  run("cantor_dust", 1.5, [&](const SeedSpec& seed, std::array<double, 2>) {
    return synthetic::cantor_dust(grid, log2_exact(grid) / 2, seed);
  });
  run("full_torus", 2.0, [&](const SeedSpec&, std::array<double, 2>) { return synthetic::full_torus(grid); });
  return out;
}

}  // namespace levelset
