#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"

using namespace levelset;

namespace {

ExperimentConfig reduced() {
  ExperimentConfig c;
  c.params.noise.delta = 0.25;
  c.solver.radius = 16;
  c.solver.grid = 64;
  c.solver.dt = 0.01;
  c.solver.horizon = 0.1;
  c.solver.record_every = 2;
  c.replicas = 6;
  c.lags = {2, 3, 4, 6, 8};
  c.series_cutoff = 64;
  c.frostman_grid = 64;
  c.frostman_n = {10.0, 100.0};
  c.mode_samples = 200;
  c.det_pairs = 50;
  c.det_cutoff = 16;
  c.sin_sum_cutoff = 64;
  c.calibration_grid = 64;
  c.calibration_placements = 2;
  c.workers = 1;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "levelset_experiment_tests" / name;
  fs::remove_all(d);
  return d;
}

void expect_same_outputs(const fs::path& a, const fs::path& b, const std::vector<std::string>& files) {
  for (const auto& f : files) EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
}

}  // namespace

TEST(ParallelCollect, IndexOrderAndLowestFailure) {
  for (int workers : {1, 3}) {
    const auto ok = parallel_collect<int>(20, workers, [](int i) { return i * i; });
    EXPECT_EQ(ok.failed_index, -1);
    EXPECT_EQ(ok.complete_prefix(), 20);
    for (int i = 0; i < 20; ++i) EXPECT_EQ(*ok.items[i], i * i);

    const auto bad = parallel_collect<int>(20, workers, [](int i) {
      if (i == 5 || i == 9) throw NumericalError("replica " + std::to_string(i));
      return i;
    });
    EXPECT_EQ(bad.failed_index, 5);
    EXPECT_EQ(bad.complete_prefix(), 5);
    for (int i = 0; i < 5; ++i) EXPECT_TRUE(bad.items[i].has_value());
    EXPECT_THROW(std::rethrow_exception(bad.error), NumericalError);
  }
}

TEST(Summaries, MedianAndKolmogorovDistance) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
  EXPECT_EQ(ks_distance({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_EQ(ks_distance({1, 2}, {3, 4}), 1.0);
  EXPECT_NEAR(ks_distance({1, 2, 3}, {2, 3, 4}), 1.0 / 3.0, 1e-15);
  const auto s = summarize_level("0", 0.0, {1.0, 1.2, 1.3, 1.5}, 5, 1.25);
  EXPECT_EQ(s.nonempty, 4);
  EXPECT_DOUBLE_EQ(s.median_slope, 1.25);
  EXPECT_DOUBLE_EQ(s.fraction_above, 0.25);
  EXPECT_DOUBLE_EQ(s.fraction_within, 0.5);
  EXPECT_DOUBLE_EQ(s.empty_fraction(), 0.2);
}

TEST(Levels, SigmaUnitsUsePointwiseStandardDeviation) {
  const auto c = reduced();
  const auto levels = resolve_levels(c);
  ASSERT_EQ(levels.size(), 2u);
  EXPECT_EQ(levels[0].y, 0.0);
  EXPECT_EQ(levels[1].label, "0.5sigma");
  EXPECT_DOUBLE_EQ(levels[1].y, 0.5 * kBasisNorm * std::sqrt(sigma_t_squared(1.0, c.params, 64).value));
}

TEST(LinearExperiment, WritesContractedFilesDeterministically) {
  auto c = reduced();
  const auto a = fresh_dir("lin_a"), b = fresh_dir("lin_b");
  const auto sa = run_linear_experiment(c, a);
  c.workers = 3;
  const auto sb = run_linear_experiment(c, b);
  for (const auto& f : sa.outputs) EXPECT_TRUE(fs::exists(a / f)) << f;
  EXPECT_TRUE(fs::exists(a / "manifest.json"));
  expect_same_outputs(a, b, sa.outputs);
  EXPECT_EQ(read_file(a / "dimension.csv").substr(0, 56),"replica,level,y,empty,slope,stderr,window,residual_rms\n0");
  EXPECT_EQ(sa.replicas, 6);
  ASSERT_EQ(sa.levels.size(), 2u);
  EXPECT_EQ(sa.levels[0].nonempty, 6);  // the zero level is never empty
}

TEST(LinearExperiment, ReplayFromManifestIsByteIdentical) {
  const auto c = reduced();
  const auto a = fresh_dir("replay_a"), b = fresh_dir("replay_b");
  const auto s = run_linear_experiment(c, a);
  const auto replayed = load_config((a / "manifest.json").string());
  EXPECT_EQ(replayed.hash(), c.hash());
  run_linear_experiment(replayed, b);
  expect_same_outputs(a, b, s.outputs);

  const auto manifest = nlohmann::json::parse(read_file(a / "manifest.json"));
  EXPECT_EQ(manifest["experiment"], "linear");
  EXPECT_EQ(manifest["seeds"].size(), 6u);
  for (const auto& f : manifest["outputs"]) {
    const std::string body = read_file(a / f["file"].get<std::string>());
    char h[32];
    std::snprintf(h, sizeof h, "%016llx", static_cast<unsigned long long>(ExperimentConfig::fnv1a(body)));
    EXPECT_EQ(f["fnv1a"].get<std::string>(), h);
    EXPECT_EQ(f["bytes"].get<size_t>(), body.size());
  }
}

TEST(LinearExperiment, SummaryRoundTripsThroughDimensionCsv) {
  const auto c = reduced();
  const auto dir = fresh_dir("roundtrip");
  const auto s = run_linear_experiment(c, dir);
  const auto back = read_dimension_csv(dir / "dimension.csv", c.params.target_dimension());
  ASSERT_EQ(back.levels.size(), s.levels.size());
  for (size_t l = 0; l < s.levels.size(); ++l) {
    EXPECT_EQ(back.levels[l].label, s.levels[l].label);
    EXPECT_EQ(back.levels[l].nonempty, s.levels[l].nonempty);
    EXPECT_NEAR(back.levels[l].median_slope, s.levels[l].median_slope, 1e-10);
  }
  EXPECT_THROW(read_dimension_csv(dir / "nothing.csv", 1.25), FormatError);
}

TEST(NonlinearExperiment, DisabledNonlinearityMatchesComposedExactSteps) {
  auto c = reduced();
  c.solver.nonlinear = false;
  c.replicas = 2;
  const auto dir = fresh_dir("nonlinear_off");
  const auto s = run_nonlinear_experiment(c, dir);
  EXPECT_EQ(s.max_residual_energy, 0.0);

  const auto modes = ModeSet::make(16);
  SpectralField z(modes);
  const SeedSpec seed{c.master_seed, 1};
  for (std::uint32_t n = 0; n < 10; ++n) z = evolve_exact(z, 0.01, c.params, seed, n);
  const auto a = analyze_field(synthesize(z, 64), resolve_levels(c), configured_lags(c), c.occupation_eps);
  ASSERT_FALSE(a.levels[0].empty);
  EXPECT_EQ(s.levels[0].slopes[1], a.levels[0].estimate.slope);
}

TEST(NonlinearExperiment, RecordsResidualsAndRejectsUnsupportedRegime) {
  const auto c = reduced();
  const auto dir = fresh_dir("nonlinear_on");
  const auto s = run_nonlinear_experiment(c, dir);
  EXPECT_LE(s.max_residual_energy, 1e-10);
  EXPECT_LE(s.max_residual_stream, 1e-10);
  EXPECT_GT(s.max_residual_energy + s.max_residual_stream, 0.0);
  EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));

  auto bad = reduced();
  bad.params.alpha = 1.0;
  bad.params.noise.delta = 0.5;
  EXPECT_THROW(run_nonlinear_experiment(bad, fresh_dir("unsupported")), ParameterError);
  bad.unsupported_regime = true;
  bad.replicas = 1;
  EXPECT_NO_THROW(run_nonlinear_experiment(bad, fresh_dir("unsupported")));
}

TEST(NonlinearExperiment, GuardFailureLeavesMarker) {
  auto c = reduced();
  c.solver.guard = 1e-9;
  const auto dir = fresh_dir("guard");
  EXPECT_THROW(run_nonlinear_experiment(c, dir), NumericalError);
  EXPECT_NE(read_file(dir / "FAILED").find("replica 0"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Comparison, IdenticalSummariesAndReuse) {
  const auto c = reduced();
  const auto dir = fresh_dir("compare");
  const auto lin = run_linear_experiment(c, dir / "linear");
  for (const auto& cmp : compare_summaries(lin, lin)) {
    EXPECT_EQ(cmp.median_difference, 0.0);
    EXPECT_EQ(cmp.ks_distance, 0.0);
  }
  const auto first = run_comparison(c, dir);
  const auto stamp = fs::last_write_time(dir / "linear" / "manifest.json");
  const auto second = run_comparison(c, dir);
  EXPECT_EQ(fs::last_write_time(dir / "linear" / "manifest.json"), stamp);
  ASSERT_EQ(first.size(), second.size());
  for (size_t l = 0; l < first.size(); ++l) EXPECT_NEAR(first[l].median_difference, second[l].median_difference, 1e-10);
  EXPECT_TRUE(fs::exists(dir / "comparison.csv"));
}

TEST(VerifyLemmas, ReducedRunIsStable) {
  const auto c = reduced();
  const auto a = fresh_dir("lemmas_a"), b = fresh_dir("lemmas_b");
  const auto ra = verify_lemmas(c, a);
  verify_lemmas(c, b);
  expect_same_outputs(a, b,
                      {"structure_function.csv", "mode_variance.csv", "sin_sum.csv", "determinant.csv", "frostman.csv",
                       "lemmas.csv"});
  EXPECT_EQ(ra.checks.size(), 13u);
  ASSERT_NE(ra.find("analytic_slope"), nullptr);
  EXPECT_EQ(ra.sin_sum_bands.size(), 3u);
  EXPECT_EQ(ra.frostman_mean.size(), 2u);
  EXPECT_GT(ra.det_min, 0.0);
}

TEST(Calibration, WritesOneRowPerSet) {
  const auto c = reduced();
  const auto dir = fresh_dir("calibration");
  const auto rep = run_calibration(c, dir);
  EXPECT_EQ(rep.sets.size(), 4u);
  const std::string csv = read_file(dir / "calibration.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}
