#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"

using namespace levelset;

namespace {

GridField from_function(int n, auto&& f) {
  GridField g(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = f(g.coordinate(i), g.coordinate(j));
  }
  return g;
}

GridField smooth_random(int n, unsigned seed) {
  return synthesize(testing_support::random_field(ModeSet::make(8), seed, 1.0), n);
}

}  // namespace

TEST(ExtractLevelSet, ConstantAndOutOfRangeFieldsAreEmpty) {
  GridField zero(16);
  EXPECT_TRUE(extract_level_set(zero, 0.0).empty());
  EXPECT_TRUE(extract_level_set(zero, 1.0).empty());
  const auto g = smooth_random(32, 4);
  const auto ls = extract_level_set(g, g.max_abs() + 1.0);
  EXPECT_TRUE(ls.empty());
  EXPECT_TRUE(ls.crossing.empty());
  EXPECT_TRUE(extract_level_set(g, -g.max_abs() - 1.0).empty());
}

TEST(ExtractLevelSet, SineHasTwoClosedLinesOfLengthTwoPi) {
  for (double phase : {0.0, 0.1}) {
    const auto g = from_function(64, [&](double x1, double) { return std::sin(x1 + phase); });
    const auto ls = extract_level_set(g, 0.0);
    EXPECT_NEAR(ls.total_length(), 4 * kPi, 1e-10) << phase;
    EXPECT_EQ(ls.crossing.cells.size(), 128u);
  }
}

TEST(ExtractLevelSet, EndpointsInterpolateToTheLevel) {
  const auto g = smooth_random(64, 9);
  for (double y : {0.0, 0.3 * g.max_abs(), -0.5 * g.max_abs()}) {
    const auto ls = extract_level_set(g, y);
    ASSERT_FALSE(ls.empty());
    for (const auto& s : ls.segments) {
      EXPECT_NEAR(interpolate(g, s.a), y, 1e-12);
      EXPECT_NEAR(interpolate(g, s.b), y, 1e-12);
    }
  }
}

TEST(ExtractLevelSet, CrossingCellsAreTheSegmentOwners) {
  const auto g = smooth_random(64, 10);
  const auto ls = extract_level_set(g, 0.1 * g.max_abs());
  std::set<std::uint32_t> owners;
  for (const auto& s : ls.segments) owners.insert(s.cell);
  EXPECT_EQ(std::vector<std::uint32_t>(owners.begin(), owners.end()), ls.crossing.cells);
  const auto raster = rasterize(ls.segments, 64);
  for (auto id : ls.crossing.cells) EXPECT_TRUE(std::binary_search(raster.cells.begin(), raster.cells.end(), id));
}

TEST(ExtractLevelSet, SaddleFollowsCentreSign) {
  // Cell (0, 0) with corners (0,0) = 1, (1,0) = -1, (1,1) = 1, (0,1) = c.
  auto saddle = [](double c) {
    GridField g(4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) g(i, j) = -5.0;
    }
    g(0, 0) = 1.0, g(1, 0) = -1.0, g(1, 1) = 1.0, g(0, 1) = c;
    return extract_level_set(g, 0.0);
  };
  const double h = kTwoPi / 4;
  auto cell_segments = [](const LevelSet& ls) {
    std::vector<Segment> out;
    for (const auto& s : ls.segments) {
      if (s.cell == 0) out.push_back(s);
    }
    return out;
  };
  // Centre 0 counts as above, so the two below corners (1,0) and (0,1) are cut off.
  for (const auto& s : cell_segments(saddle(-1.0))) {
    const bool near_10 = s.a.x1 > -kPi + 0.25 * h && s.b.x1 > -kPi + 0.25 * h;
    const bool near_01 = s.a.x2 > -kPi + 0.25 * h && s.b.x2 > -kPi + 0.25 * h;
    EXPECT_TRUE(near_10 != near_01);
  }
  EXPECT_EQ(cell_segments(saddle(-1.0)).size(), 2u);
  // Centre below: the above corners (0,0) and (1,1) are cut off instead.
  const auto below = cell_segments(saddle(-1.5));
  ASSERT_EQ(below.size(), 2u);
  int around_origin = 0;
  for (const auto& s : below) {
    if (s.a.x1 + s.a.x2 + s.b.x1 + s.b.x2 < 4 * (-kPi + 0.5 * h)) ++around_origin;
  }
  EXPECT_EQ(around_origin, 1);
}

TEST(ExtractLevelSet, PeriodicShiftInvariance) {
  const auto g = smooth_random(32, 12);
  GridField shifted(32);
  for (int i = 0; i < 32; ++i) {
    for (int j = 0; j < 32; ++j) shifted(i, j) = g.wrapped(i + 5, j - 11);
  }
  const auto a = extract_level_set(g, 0.0), b = extract_level_set(shifted, 0.0);
  EXPECT_EQ(a.crossing.cells.size(), b.crossing.cells.size());
  EXPECT_NEAR(a.total_length(), b.total_length(), 1e-12);
  std::vector<std::uint32_t> moved;
  for (auto id : b.crossing.cells) {
    const int i = static_cast<int>(id / 32), j = static_cast<int>(id % 32);
    moved.push_back(static_cast<std::uint32_t>(((i + 5) % 32) * 32 + ((j - 11 + 32) % 32)));
  }
  std::sort(moved.begin(), moved.end());
  EXPECT_EQ(moved, a.crossing.cells);
}

TEST(Rasterize, SegmentTraversal) {
  const int n = 8;
  const double h = kTwoPi / n;
  std::vector<std::uint32_t> cells;
  rasterize_segment({-kPi + 0.2 * h, -kPi + 0.3 * h}, {-kPi + 0.7 * h, -kPi + 0.6 * h}, n, cells);
  EXPECT_EQ(cells, std::vector<std::uint32_t>{0});
  cells.clear();
  // Horizontal run across three cells in x1.
  rasterize_segment({-kPi + 0.5 * h, -kPi + 2.5 * h}, {-kPi + 2.5 * h, -kPi + 2.5 * h}, n, cells);
  EXPECT_EQ(cells, (std::vector<std::uint32_t>{2, 10, 18}));
  cells.clear();
  // Beyond x1 = pi the traversal wraps to column 0.
  rasterize_segment({kPi - 0.5 * h, -kPi + 0.5 * h}, {kPi + 0.5 * h, -kPi + 0.5 * h}, n, cells);
  EXPECT_EQ(cells, (std::vector<std::uint32_t>{56, 0}));
  cells.clear();
  // A staircase visits 2m + 1 cells for m diagonal steps off the corners.
  rasterize_segment({-kPi + 0.5 * h, -kPi + 0.4 * h}, {-kPi + 3.5 * h, -kPi + 3.4 * h}, n, cells);
  EXPECT_EQ(cells.size(), 7u);
}
