#pragma once

// Level sets of periodic grid fields by marching squares, and the cell
// rasterization used for box counting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "levelset/spectral.hpp"

namespace levelset {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct Segment {
  Point a;
  Point b;
  std::uint32_t cell = 0;  // owning cell id i * N + j

  double length() const { return std::hypot(b.x1 - a.x1, b.x2 - a.x2); }
};

/// Set of cells of an N x N periodic grid, stored as sorted unique ids i * N + j.
struct CellCover {
  int grid = 0;
  std::vector<std::uint32_t> cells;

  bool empty() const { return cells.empty(); }
  void normalize() {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  }
};

struct LevelSet {
  double level = 0.0;
  CellCover crossing;
  std::vector<Segment> segments;

  bool empty() const { return segments.empty(); }
  double total_length() const {
    double s = 0.0;
    for (const auto& seg : segments) s += seg.length();
    return s;
  }
};

/// Marching squares on the periodic grid. Cell (i, j) has corners
/// (i, j), (i+1, j), (i+1, j+1), (i, j+1) taken mod N; a corner counts as
/// "above" when value >= level. Saddles are resolved by the sign of the cell
/// center (mean of the corners): the center joins the corners of its own sign.
/// Coordinates are not wrapped, so a segment in the last column may reach x = pi.
inline LevelSet extract_level_set(const GridField& g, double level) {
  const int n = g.size();
  const double h = g.spacing();
  LevelSet out;
  out.level = level;
  out.crossing.grid = n;

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // Corners counter-clockwise from (i, j).
      const std::array<double, 4> v{g(i, j), g((i + 1) % n, j), g((i + 1) % n, (j + 1) % n),
                                    g(i, (j + 1) % n)};
      const std::array<Point, 4> p{Point{-kPi + h * i, -kPi + h * j}, Point{-kPi + h * (i + 1), -kPi + h * j},
                                   Point{-kPi + h * (i + 1), -kPi + h * (j + 1)},
                                   Point{-kPi + h * i, -kPi + h * (j + 1)}};
      unsigned mask = 0;
      for (int c = 0; c < 4; ++c) mask |= (v[c] >= level ? 1u : 0u) << c;
      if (mask == 0 || mask == 15) continue;

      // Edge e joins corner e and corner e+1.
      auto cross = [&](int e) {
        const int a = e, b = (e + 1) % 4;
        const double t = (level - v[a]) / (v[b] - v[a]);
        return Point{p[a].x1 + t * (p[b].x1 - p[a].x1), p[a].x2 + t * (p[b].x2 - p[a].x2)};
      };
      auto above = [&](int c) { return ((mask >> c) & 1u) != 0; };
      const auto id = static_cast<std::uint32_t>(i * n + j);

      if (mask == 5 || mask == 10) {
        const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        const bool centre_above = centre >= level;
        // Cut off each corner whose sign differs from the centre.
        for (int c = 0; c < 4; ++c) {
          if (above(c) == centre_above) continue;
          out.segments.push_back({cross((c + 3) % 4), cross(c), id});
        }
      } else {
        std::array<int, 2> edges{};
        int found = 0;
        for (int e = 0; e < 4; ++e) {
          if (above(e) != above((e + 1) % 4)) edges[found++] = e;
        }
        out.segments.push_back({cross(edges[0]), cross(edges[1]), id});
      }
      out.crossing.cells.push_back(id);
    }
  }
  return out;
}

/// Bilinear interpolation of the grid at a torus point.
inline double interpolate(const GridField& g, Point x) {
  const double u = (x.x1 + kPi) / g.spacing();
  const double w = (x.x2 + kPi) / g.spacing();
  const double fu = std::floor(u), fw = std::floor(w);
  const double tu = u - fu, tw = w - fw;
  const int i = static_cast<int>(fu), j = static_cast<int>(fw);
  return (1 - tu) * (1 - tw) * g.wrapped(i, j) + tu * (1 - tw) * g.wrapped(i + 1, j) +
         tu * tw * g.wrapped(i + 1, j + 1) + (1 - tu) * tw * g.wrapped(i, j + 1);
}

/// Cells of an N x N periodic grid met by a polyline segment (grid
/// traversal in the style of Amanatides and Woo).
inline void rasterize_segment(Point a, Point b, int n, std::vector<std::uint32_t>& cells) {
  const double h = kTwoPi / n;
  const double ax = (a.x1 + kPi) / h, ay = (a.x2 + kPi) / h;
  const double bx = (b.x1 + kPi) / h, by = (b.x2 + kPi) / h;
  long ci = static_cast<long>(std::floor(ax)), cj = static_cast<long>(std::floor(ay));
  const long ei = static_cast<long>(std::floor(bx)), ej = static_cast<long>(std::floor(by));
  const double dx = bx - ax, dy = by - ay;
  const int si = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sj = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = si == 0 ? inf : ((si > 0 ? (ci + 1) - ax : ax - ci) / std::abs(dx));
  double t_max_y = sj == 0 ? inf : ((sj > 0 ? (cj + 1) - ay : ay - cj) / std::abs(dy));
  const double t_dx = si == 0 ? inf : 1.0 / std::abs(dx);
  const double t_dy = sj == 0 ? inf : 1.0 / std::abs(dy);
  auto emit = [&](long i, long j) {
    const long wi = ((i % n) + n) % n, wj = ((j % n) + n) % n;
    cells.push_back(static_cast<std::uint32_t>(wi * n + wj));
  };
  emit(ci, cj);
  const long steps = std::labs(ei - ci) + std::labs(ej - cj);
  for (long s = 0; s < steps; ++s) {
    if (t_max_x < t_max_y) {
      ci += si;
      t_max_x += t_dx;
    } else {
      cj += sj;
      t_max_y += t_dy;
    }
    emit(ci, cj);
  }
}

inline CellCover rasterize(const std::vector<Segment>& segments, int n) {
  CellCover cover;
  cover.grid = n;
  for (const auto& s : segments) rasterize_segment(s.a, s.b, n, cover.cells);
  cover.normalize();
  return cover;
}

}  // namespace levelset
