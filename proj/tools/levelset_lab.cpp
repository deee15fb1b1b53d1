// levelset-lab: command-line front end for the level-set dimension experiments.
//
// Exit codes: 0 success, 1 validation failure, 2 numerical failure,
// 3 acceptance-check failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "levelset.hpp"

namespace {

using namespace levelset;

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitAcceptance = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<int> workers;
  std::string out;
  bool unsupported = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "config file or manifest.json to replay");
  app->add_option("--seed", o.seed, "master seed (overrides seed.master)");
  app->add_option("--replicas", o.replicas, "ensemble size (overrides experiment.replicas)");
  app->add_option("--workers", o.workers, "worker threads, 0 = all cores");
  app->add_option("--out", o.out, "output directory");
  app->add_flag("--unsupported-regime", o.unsupported, "allow parameters outside the nonlinear theory");
}

ExperimentConfig build_config(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.replicas) cfg.replicas = *o.replicas;
  if (o.workers) cfg.workers = *o.workers;
  if (o.unsupported) cfg.unsupported_regime = true;
  return cfg;
}

fs::path out_dir(const CommonOptions& o, const ExperimentConfig& cfg, const char* name) {
  return o.out.empty() ? fs::path(cfg.output) / name : fs::path(o.out);
}

void print_summary(const ExperimentSummary& s, const fs::path& dir) {
  std::printf("%s: %d replicas, target dimension %.4g, sigma unit %.6g\n", s.experiment.c_str(), s.replicas, s.target,
              s.sigma_unit);
  for (const auto& l : s.levels) {
    std::printf("  y = %-10s (%.6g)  nonempty %3d/%d  median slope %.4f  above %.3f  within %.3f\n", l.label.c_str(),
                l.y, l.nonempty, l.replicas, l.median_slope, l.fraction_above, l.fraction_within);
  }
  std::printf("  structure-function slope %.4f (max rel. error vs analytic %.3f)\n", s.structure.slope,
              s.max_structure_error);
  if (s.experiment == "nonlinear") {
    std::printf("  max conservation residuals %.3g, %.3g\n", s.max_residual_energy, s.max_residual_stream);
  }
  std::printf("  outputs in %s\n", dir.string().c_str());
}

int run(int argc, char** argv) {
  CLI::App app{"Level-set dimension experiments for the stochastic Navier-Stokes alpha-model"};
  app.require_subcommand(1);

  CommonOptions lin_o, non_o, lem_o, cmp_o, cal_o;
  auto* lin = app.add_subcommand("sample-linear", "exact linear fields and their level-set dimensions");
  add_common(lin, lin_o);
  int dump_grids = 0;
  lin->add_option("--dump-grids", dump_grids, "also write the first n fields as grid files");

  auto* non = app.add_subcommand("solve-nonlinear", "Galerkin solutions and their level-set dimensions");
  add_common(non, non_o);

  auto* dim = app.add_subcommand("dimension", "box-counting dimension of a level set of a grid file");
  std::vector<std::string> inputs;
  std::vector<double> dim_levels{0.0};
  dim->add_option("inputs", inputs, "grid files")->required()->check(CLI::ExistingFile);
  dim->add_option("--level", dim_levels, "absolute level(s) y");

  auto* lem = app.add_subcommand("verify-lemmas", "numerical checks of the supporting lemmas");
  add_common(lem, lem_o);

  auto* cmp = app.add_subcommand("compare", "linear vs nonlinear dimension statistics");
  add_common(cmp, cmp_o);
  bool rerun = false;
  cmp->add_flag("--rerun", rerun, "recompute even if matching outputs exist");

  auto* cal = app.add_subcommand("calibrate-estimator", "box-counting estimator on sets of known dimension");
  add_common(cal, cal_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*lin) {
      const auto cfg = build_config(lin_o);
      const auto dir = out_dir(lin_o, cfg, "linear");
      print_summary(run_linear_experiment(cfg, dir), dir);
      if (dump_grids > 0) {
        const auto modes = ModeSet::make(cfg.solver.radius, cfg.solver.shape);
        fs::create_directories(dir / "grids");
        for (int r = 0; r < std::min(dump_grids, cfg.replicas); ++r) {
          const SeedSpec seed{cfg.master_seed, static_cast<std::uint32_t>(r)};
          const auto z = sample_exact(cfg.time, modes, cfg.params, seed, cfg.stationary);
          char name[64];
          std::snprintf(name, sizeof name, "replica_%04d", r);
          io::write_spectral(dir / "grids" / (std::string(name) + ".spec"), z);
          io::write_grid(dir / "grids" / (std::string(name) + ".grid"), synthesize(z, cfg.solver.grid));
        }
      }
      return 0;
    }
    if (*non) {
      const auto cfg = build_config(non_o);
      const auto dir = out_dir(non_o, cfg, "nonlinear");
      print_summary(run_nonlinear_experiment(cfg, dir), dir);
      return 0;
    }
    if (*dim) {
      std::printf("file,y,empty,slope,stderr,window,scales\n");
      for (const auto& path : inputs) {
        const GridField g = io::read_grid(path);
        for (double y : dim_levels) {
          const LevelSet ls = extract_level_set(g, y);
          if (ls.empty()) {
            std::printf("%s,%.12g,1,nan,nan,,0\n", path.c_str(), y);
            continue;
          }
          const auto e = estimate_dimension(box_count(ls.crossing));
          std::printf("%s,%.12g,0,%.12g,%.12g,%d-%d,%d\n", path.c_str(), y, e.slope, e.stderr_slope, e.k_min, e.k_max,
                      e.scales_used);
        }
      }
      return 0;
    }
    if (*lem) {
      const auto cfg = build_config(lem_o);
      const auto dir = out_dir(lem_o, cfg, "lemmas");
      const auto rep = verify_lemmas(cfg, dir);
      for (const auto& c : rep.checks) {
        std::printf("%-4s %-24s %-38s measured %-12.6g threshold %.6g\n", c.pass ? "PASS" : "FAIL", c.lemma.c_str(),
                    c.check.c_str(), c.measured, c.threshold);
      }
      return rep.all_pass() ? 0 : kExitAcceptance;
    }
    if (*cmp) {
      const auto cfg = build_config(cmp_o);
      const auto dir = out_dir(cmp_o, cfg, "compare");
      bool ok = true;
      for (const auto& c : run_comparison(cfg, dir, !rerun)) {
        const bool pass = c.median_difference <= 0.1;
        ok = ok && pass;
        std::printf("%s y = %-10s median linear %.4f nonlinear %.4f |diff| %.4f KS %.3f empty %.3f / %.3f\n",
                    pass ? "PASS" : "FAIL", c.label.c_str(), c.median_linear, c.median_nonlinear, c.median_difference,
                    c.ks_distance, c.empty_linear, c.empty_nonlinear);
      }
      return ok ? 0 : kExitAcceptance;
    }
    if (*cal) {
      const auto cfg = build_config(cal_o);
      const auto dir = out_dir(cal_o, cfg, "calibration");
      const auto rep = run_calibration(cfg, dir);
      for (const auto& s : rep.sets) {
        std::printf("%-12s theory %.4f  mean %.4f  [%.4f, %.4f] over %d placements\n", s.name.c_str(), s.theoretical,
                    s.mean_slope, s.min_slope, s.max_slope, s.placements);
      }
      return rep.pass ? 0 : kExitAcceptance;
    }
  } catch (const ParameterError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const ResolutionError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
