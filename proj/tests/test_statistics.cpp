#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace levelset;
using testing_support::rel_diff;

namespace {

ModelParams defaults() {
  ModelParams p;
  p.noise.delta = 0.25;
  return p;
}

GridField from_function(int n, auto&& f) {
  GridField g(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = f(g.coordinate(i), g.coordinate(j));
  }
  return g;
}

double brute_energy(const GridField& rho, double gamma) {
  const int n = rho.size();
  const double h = rho.spacing();
  double e = 0.0;
  for (int a = 0; a < n * n; ++a) {
    for (int b = 0; b < n * n; ++b) {
      if (a == b) continue;
      const double d = torus_norm((a / n - b / n) * h, (a % n - b % n) * h);
      e += rho.values()[a] * rho.values()[b] * h * h * h * h * std::pow(d, -gamma);
    }
  }
  return e;
}

}  // namespace

TEST(TorusNorm, NearestTranslate) {
  EXPECT_NEAR(torus_norm(kTwoPi - 0.1, 0.0), 0.1, 1e-14);
  EXPECT_NEAR(torus_norm(kPi, kPi), kPi * std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(torus_norm(-3 * kPi, 0.3), std::hypot(kPi, 0.3), 1e-13);
  EXPECT_EQ(torus_norm(0.0, 0.0), 0.0);
}

TEST(StructureFunctionEmpirical, LagZeroAndTooFewSamples) {
  const auto g = synthesize(testing_support::random_field(ModeSet::make(10), 1), 32);
  EXPECT_EQ(mean_square_increment(g, {0, 0}), 0.0);
  EXPECT_EQ(mean_square_increment(g, {32, -64}), 0.0);
  std::vector<GridField> few(49, g);
  const std::vector<Lag> lags{{1, 0}};
  EXPECT_THROW(structure_function_empirical(few, lags), ParameterError);
  EXPECT_EQ(axis_lags(std::vector<int>{2, 5}).size(), 4u);
}

TEST(StructureFunctionEmpirical, MatchesAnalyticSeries) {
  const auto p = defaults();
  const auto ms = ModeSet::make(85);
  std::vector<GridField> samples;
  for (std::uint32_t r = 0; r < 200; ++r) samples.push_back(synthesize(sample_exact(1.0, ms, p, {20130819, r}), 256));
  const std::vector<int> cells{2, 4, 8, 16, 32};
  const auto lags = axis_lags(cells);
  const auto est = structure_function_empirical(samples, lags);
  ASSERT_EQ(est.points.size(), cells.size());
  std::vector<double> lx, ly;
  for (const auto& pt : est.points) {
    EXPECT_EQ(pt.lags, 2);
    const double g = structure_function_analytic(pt.distance, 0.0, 1.0, p, 85).value;
    EXPECT_LE(rel_diff(pt.value, g), 0.05) << pt.distance;
    lx.push_back(std::log(pt.distance));
    ly.push_back(std::log(g));
  }
  EXPECT_NEAR(est.slope, least_squares(lx, ly).slope, 0.05);
}

TEST(SinSum, ZeroAndOracles) {
  EXPECT_EQ(sin_sum(0.0, 0.0, 1.0, 2, 64).value, 0.0);
  EXPECT_EQ(sin_sum(0.0, 0.7, 1.0, 1, 64).value, 0.0);
  EXPECT_THROW(sin_sum(0.1, 0.1, 0.0, 2, 64), ParameterError);
  EXPECT_THROW(sin_sum(0.1, 0.1, 1.0, 3, 64), ParameterError);

  double one = 0.0;
  for (int k = -100; k <= 100; ++k) {
    if (k != 0) one += std::pow(std::abs(k), -1.5) * std::pow(std::sin(k * 0.3), 2);
  }
  EXPECT_NEAR(sin_sum(0.3, 0.0, 0.5, 1, 100).value, one, 1e-12);

  double two = 0.0;
  for (int a = -40; a <= 40; ++a) {
    for (int b = -40; b <= 40; ++b) {
      const int n2 = a * a + b * b;
      if (n2 == 0 || n2 > 1600) continue;
      two += std::pow(n2, -1.5) * std::pow(std::sin(0.2 * a - 0.45 * b), 2);
    }
  }
  EXPECT_NEAR(sin_sum(0.2, -0.45, 1.0, 2, 40).value, two, 1e-12);
}

TEST(SinSum, CutoffDoublingWithinTail) {
  for (double gamma : {0.5, 1.0, 3.0}) {
    const auto a = sin_sum(0.05, 0.02, gamma, 2, 128), b = sin_sum(0.05, 0.02, gamma, 2, 256);
    EXPECT_LE(std::abs(b.value - a.value), a.tail_bound) << gamma;
  }
  EXPECT_NEAR(h_gamma(0.1, 2.0), 0.01 * std::log(10.0), 1e-15);
  EXPECT_NEAR(h_gamma(0.1, 3.0), 0.01, 1e-15);
  EXPECT_NEAR(h_gamma(0.25, 0.5), 0.5, 1e-15);
}

TEST(Frostman, ConstantFieldMass) {
  GridField g(32);
  for (auto& v : g.values()) v = 0.4;
  for (double n : {1.0, 100.0}) {
    EXPECT_NEAR(frostman_mass(g, 0.4, n), std::sqrt(kTwoPi * n) * kTwoPi * kTwoPi, 1e-10);
  }
}

TEST(Frostman, RefusesUnresolvedN) {
  const auto g = from_function(32, [](double x1, double) { return std::sin(x1); });
  const double n_max = frostman_max_n(g);
  EXPECT_GT(n_max, 0.0);
  EXPECT_NO_THROW(frostman_mass(g, 0.0, n_max));
  EXPECT_THROW(frostman_mass(g, 0.0, 1.01 * n_max), ResolutionError);
  EXPECT_THROW(frostman_mass(g, 0.0, 0.0), ParameterError);
  EXPECT_THROW(frostman_energy(g, 0.0, 10.0, 2.0), ParameterError);
  EXPECT_THROW(EnergyKernel(16, 2.5), ParameterError);
}

TEST(Frostman, EnergyMatchesBruteForce) {
  GridField uniform(16);
  for (auto& v : uniform.values()) v = 1.0;
  const auto e = measure_energy(uniform, 0.5);
  EXPECT_LE(rel_diff(e.energy, brute_energy(uniform, 0.5)), 1e-12);
  EXPECT_GT(e.diagonal_bound, 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GridField rho(16);
  for (auto& v : rho.values()) v = u(rng);
  for (double gamma : {0.5, 1.1, 1.9}) EXPECT_LE(rel_diff(measure_energy(rho, gamma).energy, brute_energy(rho, gamma)), 1e-12);
}

TEST(Frostman, EnergyIncreasesWithGammaOnSmallBall) {
  // Supported in a disc of radius 0.4, so every pairwise distance is below 1.
  const auto rho = from_function(64, [](double x1, double x2) { return std::hypot(x1, x2) < 0.4 ? 1.0 : 0.0; });
  double prev = 0.0;
  for (double gamma : {0.25, 0.5, 1.0, 1.5, 1.9}) {
    const double e = measure_energy(rho, gamma).energy;
    EXPECT_GT(e, prev) << gamma;
    prev = e;
  }
}

TEST(Frostman, SampledFieldEnergyFinite) {
  const auto g = synthesize(sample_exact(1.0, ModeSet::make(40), defaults(), {1, 0}), 128);
  const EnergyKernel kernel(128, 1.1);
  const auto e = frostman_energy(g, 0.0, 10.0, kernel);
  EXPECT_TRUE(std::isfinite(e.energy));
  EXPECT_GT(e.energy, 0.0);
  EXPECT_DOUBLE_EQ(e.energy, frostman_energy(g, 0.0, 10.0, 1.1).energy);
}

TEST(Occupation, Examples) {
  const auto g = from_function(1024, [](double x1, double) { return std::sin(x1); });
  EXPECT_EQ(occupation_fraction(g, 1.0), 1.0);
  for (double eps : {0.2, 0.1, 0.05, 0.02}) {
    EXPECT_NEAR(occupation_fraction(g, eps), 2.0 / kPi * std::asin(eps), 2.0 / 1024) << eps;
  }
  EXPECT_THROW(occupation_fraction(g, 0.0), ParameterError);
}

TEST(CovarianceDet, PositiveAndStableUnderCutoffDoubling) {
  const auto p = defaults();
  const auto a = covariance_det_check(p, 1.0, 200, 64, {20130819, 0});
  const auto b = covariance_det_check(p, 1.0, 200, 128, {20130819, 0});
  EXPECT_EQ(a.distances, b.distances);
  EXPECT_GT(a.min_ratio, 0.0);
  EXPECT_LE(a.min_ratio, a.median_ratio);
  EXPECT_LE(a.median_ratio, a.max_ratio);
  EXPECT_LE(rel_diff(b.min_ratio, a.min_ratio), 0.1);
  EXPECT_THROW(covariance_det_check(p, 1.0, 0, 64, {1, 0}), ParameterError);
}
