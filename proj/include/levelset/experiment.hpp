#pragma once

// Ensemble experiments: linear and nonlinear level-set dimension runs, their
// comparison, the lemma checks and estimator calibration. Every run writes
// CSVs plus a manifest.json from which it can be replayed byte for byte.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "levelset/box_counting.hpp"
#include "levelset/config.hpp"
#include "levelset/galerkin.hpp"
#include "levelset/io.hpp"
#include "levelset/level_set.hpp"
#include "levelset/linear.hpp"
#include "levelset/plot.hpp"
#include "levelset/statistics.hpp"

namespace levelset {

inline constexpr const char* kCodeVersion = "0.1.0";
/// Estimator-noise allowance around the target dimension.
inline constexpr double kSlopeTolerance = 0.15;

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Worker pool

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

template <class T>
struct Collected {
  std::vector<std::optional<T>> items;
  int failed_index = -1;
  std::exception_ptr error;

  /// Number of leading items before the first failure.
  int complete_prefix() const { return failed_index < 0 ? static_cast<int>(items.size()) : failed_index; }
};

/// Runs fn(0..n-1) on a bounded pool. Results land in index order, so the
/// outcome does not depend on scheduling; on failure the lowest failing
/// index is kept.
template <class T, class Fn>
Collected<T> parallel_collect(int n, int workers, Fn&& fn) {
  Collected<T> c;
  c.items.resize(static_cast<size_t>(n));
  std::atomic<int> next{0};
  std::mutex m;
  auto work = [&] {
    for (;;) {
      const int i = next++;
      if (i >= n) return;
      {
        std::lock_guard lock(m);
        if (c.failed_index >= 0 && i > c.failed_index) continue;
      }
      try {
        c.items[static_cast<size_t>(i)] = fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (c.failed_index < 0 || i < c.failed_index) {
          c.failed_index = i;
          c.error = std::current_exception();
        }
      }
    }
  };
  const int w = std::min(resolve_workers(workers), std::max(n, 1));
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return c;
}

// ---------------------------------------------------------------------------
// Per-field analysis

struct ResolvedLevel {
  std::string label;
  double y = 0.0;
};

/// Pointwise standard deviation c sigma_t of the linear field: the unit of
/// "sigma" levels.
inline double sigma_unit(const ExperimentConfig& cfg) {
  return std::sqrt(point_variance(cfg.time, cfg.params, cfg.series_cutoff).value);
}

inline std::vector<ResolvedLevel> resolve_levels(const ExperimentConfig& cfg) {
  std::vector<ResolvedLevel> out;
  const double unit = sigma_unit(cfg);
  for (const auto& l : cfg.levels) {
    out.push_back({ExperimentConfig::fmt(l.value) + (l.sigma_units ? "sigma" : ""),
                   l.sigma_units ? l.value * unit : l.value});
  }
  return out;
}

inline std::vector<Lag> configured_lags(const ExperimentConfig& cfg) { return axis_lags(cfg.lags); }

struct LevelOutcome {
  bool empty = true;
  BoxCountCurve curve;
  DimensionEstimate estimate;
};

struct FieldAnalysis {
  std::vector<LevelOutcome> levels;
  std::vector<double> lag_means;  // per configured_lags entry
  std::vector<double> occupation; // per occupation eps
};

inline FieldAnalysis analyze_field(const GridField& g, const std::vector<ResolvedLevel>& levels,
                                   const std::vector<Lag>& lags, const std::vector<double>& eps) {
  FieldAnalysis a;
  for (const auto& lv : levels) {
    LevelOutcome o;
    const LevelSet ls = extract_level_set(g, lv.y);
    o.empty = ls.empty();
    o.curve = box_count(ls.crossing);
    if (!o.empty) o.estimate = estimate_dimension(o.curve);
    a.levels.push_back(std::move(o));
  }
  for (const Lag& lag : lags) a.lag_means.push_back(mean_square_increment(g, lag));
  for (double e : eps) a.occupation.push_back(occupation_fraction(g, e));
  return a;
}

// ---------------------------------------------------------------------------
// Summaries

struct LevelSummary {
  std::string label;
  double y = 0.0;
  int replicas = 0;
  int nonempty = 0;
  double median_slope = std::numeric_limits<double>::quiet_NaN();
  double fraction_above = 0.0;   // slope > target + tolerance, over nonempty replicas
  double fraction_within = 0.0;  // |slope - target| <= tolerance, over nonempty replicas
  std::vector<double> slopes;    // nonempty replicas, replica order

  double empty_fraction() const { return replicas ? 1.0 - static_cast<double>(nonempty) / replicas : 0.0; }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline LevelSummary summarize_level(const std::string& label, double y, const std::vector<double>& slopes,
                                    int replicas, double target) {
  LevelSummary s;
  s.label = label;
  s.y = y;
  s.replicas = replicas;
  s.slopes = slopes;
  s.nonempty = static_cast<int>(slopes.size());
  if (!slopes.empty()) {
    s.median_slope = median(slopes);
    int above = 0, within = 0;
    for (double v : slopes) {
      above += v > target + kSlopeTolerance;
      within += std::abs(v - target) <= kSlopeTolerance;
    }
    s.fraction_above = static_cast<double>(above) / s.nonempty;
    s.fraction_within = static_cast<double>(within) / s.nonempty;
  }
  return s;
}

struct ExperimentSummary {
  std::string experiment;
  double target = 0.0;
  double sigma_unit = 0.0;
  int replicas = 0;
  std::vector<LevelSummary> levels;
  StructureFunctionEstimate structure;
  std::vector<double> structure_analytic;  // per structure point
  double max_structure_error = 0.0;        // max relative deviation empirical vs analytic
  double max_residual_energy = 0.0;        // nonlinear runs only
  double max_residual_stream = 0.0;
  std::vector<std::string> outputs;
};

// ---------------------------------------------------------------------------
// Manifest

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_manifest(const fs::path& dir, const std::string& experiment, const ExperimentConfig& cfg,
                           int replicas, const std::string& started, const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["code_version"] = kCodeVersion;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash()));
  j["config_hash"] = hash;
  j["config"] = cfg.to_text();
  j["started"] = started;
  j["finished"] = utc_timestamp();
  auto seeds = nlohmann::ordered_json::array();
  for (int r = 0; r < replicas; ++r) seeds.push_back({{"replica", r}, {"master_seed", cfg.master_seed}});
  j["seeds"] = seeds;
  auto files = nlohmann::ordered_json::array();
  for (const auto& name : outputs) {
    const std::string body = read_file(dir / name);
    char h[32];
    std::snprintf(h, sizeof h, "%016llx", static_cast<unsigned long long>(ExperimentConfig::fnv1a(body)));
    files.push_back({{"file", name}, {"bytes", body.size()}, {"fnv1a", h}});
  }
  j["outputs"] = files;
  std::ofstream(dir / "manifest.json") << j.dump(2) << '\n';
}

/// Loads either a config file or the config embedded in a manifest.json.
inline ExperimentConfig load_config(const std::string& path) {
  const std::string text = read_file(path);
  if (text.empty() && !fs::exists(path)) throw FormatError("cannot open config " + path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ": " + e.what());
    }
    if (!j.contains("config")) throw FormatError(path + ": manifest has no config entry");
    return ExperimentConfig::parse(j["config"].get<std::string>());
  }
  return ExperimentConfig::parse(text);
}

namespace detail {

inline void mark_failure(const fs::path& dir, int index, std::exception_ptr error) {
  std::string what = "unknown error";
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    what = e.what();
  } catch (...) {
  }
  std::ofstream(dir / "FAILED") << "replica " << index << ": " << what << '\n';
}

inline std::string window_text(const DimensionEstimate& e) {
  return std::to_string(e.k_min) + "-" + std::to_string(e.k_max);
}

/// Shared output stage of the linear and nonlinear experiments.
inline ExperimentSummary write_ensemble(const fs::path& dir, const std::string& experiment, const ExperimentConfig& cfg,
                                        const std::vector<ResolvedLevel>& levels, const std::vector<Lag>& lags,
                                        const std::vector<const FieldAnalysis*>& analyses) {
  ExperimentSummary sum;
  sum.experiment = experiment;
  sum.target = cfg.params.target_dimension();
  sum.sigma_unit = sigma_unit(cfg);
  sum.replicas = static_cast<int>(analyses.size());
  const int n = sum.replicas;

  {
    io::CsvWriter bc(dir / "boxcount.csv", {"replica", "level", "y", "k", "N_k"});
    io::CsvWriter dm(dir / "dimension.csv",
                     {"replica", "level", "y", "empty", "slope", "stderr", "window", "residual_rms"});
    for (int r = 0; r < n; ++r) {
      for (size_t l = 0; l < levels.size(); ++l) {
        const auto& o = analyses[r]->levels[l];
        for (size_t q = 0; q < o.curve.scales.size(); ++q) {
          bc.row(r, levels[l].label, levels[l].y, o.curve.scales[q], static_cast<long long>(o.curve.counts[q]));
        }
        if (o.empty) {
          dm.row(r, levels[l].label, levels[l].y, 1, "nan", "nan", "", "nan");
        } else {
          dm.row(r, levels[l].label, levels[l].y, 0, o.estimate.slope, o.estimate.stderr_slope,
                 window_text(o.estimate), o.estimate.residual_rms);
        }
      }
    }
  }
  for (size_t l = 0; l < levels.size(); ++l) {
    std::vector<double> slopes;
    for (int r = 0; r < n; ++r) {
      if (!analyses[r]->levels[l].empty) slopes.push_back(analyses[r]->levels[l].estimate.slope);
    }
    sum.levels.push_back(summarize_level(levels[l].label, levels[l].y, slopes, n, sum.target));
  }

  // Structure function: ensemble means in replica order.
  std::vector<double> means(lags.size(), 0.0);
  for (size_t q = 0; q < lags.size(); ++q) {
    for (int r = 0; r < n; ++r) means[q] += analyses[r]->lag_means[q];
    means[q] /= std::max(n, 1);
  }
  sum.structure = structure_function_from_means(cfg.solver.grid, lags, means, n);
  {
    io::CsvWriter sf(dir / "structure_function.csv", {"r", "g_analytic", "g_empirical", "n_samples", "rel_error"});
    for (const auto& p : sum.structure.points) {
      const double ga = structure_function_analytic(p.distance, 0.0, cfg.time, cfg.params, cfg.series_cutoff).value;
      const double rel = ga > 0.0 ? std::abs(p.value - ga) / ga : 0.0;
      sum.structure_analytic.push_back(ga);
      sum.max_structure_error = std::max(sum.max_structure_error, rel);
      sf.row(p.distance, ga, p.value, n, rel);
    }
  }
  {
    io::CsvWriter oc(dir / "occupation.csv", {"replica", "eps", "fraction", "ratio"});
    for (int r = 0; r < n; ++r) {
      for (size_t e = 0; e < cfg.occupation_eps.size(); ++e) {
        const double f = analyses[r]->occupation[e];
        oc.row(r, cfg.occupation_eps[e], f, f / cfg.occupation_eps[e]);
      }
    }
  }
  {
    io::CsvWriter sm(dir / "summary.csv", {"level", "y", "replicas", "nonempty", "median_slope", "fraction_above",
                                           "fraction_within", "target", "sf_slope", "sf_max_rel_error"});
    for (const auto& s : sum.levels) {
      sm.row(s.label, s.y, s.replicas, s.nonempty, s.median_slope, s.fraction_above, s.fraction_within, sum.target,
             sum.structure.slope, sum.max_structure_error);
    }
  }

  // Figures.
  {
    plot::LogLogPlot p("box counts, " + experiment, "box side 2 pi 2^-k", "N_k");
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    for (size_t l = 0; l < levels.size(); ++l) {
      const auto& curve = analyses.empty() ? BoxCountCurve{} : analyses.front()->levels[l].curve;
      plot::Series s;
      s.label = "y = " + levels[l].label + ", replica 0";
      s.color = colors[l % 4];
      for (size_t q = 0; q < curve.scales.size(); ++q) {
        s.x.push_back(kTwoPi * std::ldexp(1.0, -curve.scales[q]));
        s.y.push_back(static_cast<double>(curve.counts[q]));
      }
      p.add(std::move(s));
    }
    p.write(dir / "boxcount.svg");
  }
  {
    plot::LogLogPlot p("structure function, " + experiment, "|r|_T", "E|z(x+r) - z(x)|^2");
    plot::Series emp{"empirical", {}, {}, "#1f77b4", true, false};
    plot::Series ana{"analytic series", {}, {}, "#d62728", false, true};
    for (size_t q = 0; q < sum.structure.points.size(); ++q) {
      emp.x.push_back(sum.structure.points[q].distance);
      emp.y.push_back(sum.structure.points[q].value);
      ana.x.push_back(sum.structure.points[q].distance);
      ana.y.push_back(sum.structure_analytic[q]);
    }
    p.add(std::move(emp));
    p.add(std::move(ana));
    p.write(dir / "structure_function.svg");
  }
  sum.outputs = {"boxcount.csv",     "dimension.csv",   "structure_function.csv", "occupation.csv",
                 "summary.csv",      "boxcount.svg",    "structure_function.svg"};
  return sum;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments

/// Exact linear fields at time t, level sets at every configured y.
inline ExperimentSummary run_linear_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  cfg.validate(false);
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");
  const std::string started = utc_timestamp();
  const auto levels = resolve_levels(cfg);
  const auto lags = configured_lags(cfg);
  const auto modes = ModeSet::make(cfg.solver.radius, cfg.solver.shape);
  const GridTransform transform(modes, cfg.solver.grid);

  auto results = parallel_collect<FieldAnalysis>(cfg.replicas, cfg.workers, [&](int r) {
    const SeedSpec seed{cfg.master_seed, static_cast<std::uint32_t>(r)};
    const SpectralField z = sample_exact(cfg.time, modes, cfg.params, seed, cfg.stationary);
    return analyze_field(transform.synthesize(z), levels, lags, cfg.occupation_eps);
  });
  std::vector<const FieldAnalysis*> done;
  for (int r = 0; r < results.complete_prefix(); ++r) done.push_back(&*results.items[r]);
  auto sum = detail::write_ensemble(dir, "linear", cfg, levels, lags, done);
  write_manifest(dir, "linear", cfg, static_cast<int>(done.size()), started, sum.outputs);
  if (results.error) {
    detail::mark_failure(dir, results.failed_index, results.error);
    std::rethrow_exception(results.error);
  }
  return sum;
}

struct NonlinearReplica {
  FieldAnalysis analysis;
  TrajectoryRecord trajectory;
};

/// Galerkin solutions at the horizon T, analyzed like the linear fields.
inline ExperimentSummary run_nonlinear_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  cfg.validate(true);
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");
  const std::string started = utc_timestamp();
  const auto levels = resolve_levels(cfg);
  const auto lags = configured_lags(cfg);
  const GalerkinSolver solver(cfg.params, cfg.solver, cfg.unsupported_regime);
  const GridTransform transform(solver.modes(), cfg.solver.grid);

  auto results = parallel_collect<NonlinearReplica>(cfg.replicas, cfg.workers, [&](int r) {
    const SeedSpec seed{cfg.master_seed, static_cast<std::uint32_t>(r)};
    const SpectralField theta0 = cfg.initial_l2 > 0.0
                                     ? random_initial_condition(solver.modes(), cfg.initial_l2, seed)
                                     : SpectralField(solver.modes());
    TrajectoryRecord rec = solver.solve(theta0, seed);
    FieldAnalysis a = analyze_field(transform.synthesize(rec.final_state), levels, lags, cfg.occupation_eps);
    rec.final_state = SpectralField(solver.modes());  // not needed past this point
    return NonlinearReplica{std::move(a), std::move(rec)};
  });
  std::vector<const FieldAnalysis*> done;
  for (int r = 0; r < results.complete_prefix(); ++r) done.push_back(&results.items[r]->analysis);
  auto sum = detail::write_ensemble(dir, "nonlinear", cfg, levels, lags, done);
  {
    io::CsvWriter tr(dir / "trajectory.csv",
                     {"replica", "t", "l2_norm", "hneg_norm", "b_identity_residual_1", "b_identity_residual_2"});
    for (int r = 0; r < static_cast<int>(done.size()); ++r) {
      const auto& rec = results.items[r]->trajectory;
      for (size_t q = 0; q < rec.times.size(); ++q) {
        tr.row(r, rec.times[q], rec.l2_norm[q], rec.hneg_norm[q], rec.residual_energy[q], rec.residual_stream[q]);
        sum.max_residual_energy = std::max(sum.max_residual_energy, rec.residual_energy[q]);
        sum.max_residual_stream = std::max(sum.max_residual_stream, rec.residual_stream[q]);
      }
    }
  }
  sum.outputs.push_back("trajectory.csv");
  write_manifest(dir, "nonlinear", cfg, static_cast<int>(done.size()), started, sum.outputs);
  if (results.error) {
    detail::mark_failure(dir, results.failed_index, results.error);
    std::rethrow_exception(results.error);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Comparison

struct LevelComparison {
  std::string label;
  double median_linear = 0.0;
  double median_nonlinear = 0.0;
  double median_difference = 0.0;  // |linear - nonlinear|
  double ks_distance = 0.0;        // sup-distance of the empirical slope CDFs
  double empty_linear = 0.0;
  double empty_nonlinear = 0.0;
};

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty() ? 0.0 : 1.0;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

inline std::vector<LevelComparison> compare_summaries(const ExperimentSummary& lin, const ExperimentSummary& non) {
  if (lin.levels.size() != non.levels.size()) throw FormatError("compared experiments have different level lists");
  std::vector<LevelComparison> out;
  for (size_t l = 0; l < lin.levels.size(); ++l) {
    const auto& a = lin.levels[l];
    const auto& b = non.levels[l];
    if (a.label != b.label) throw FormatError("compared experiments have different levels");
    LevelComparison c;
    c.label = a.label;
    c.median_linear = a.median_slope;
    c.median_nonlinear = b.median_slope;
    c.median_difference = std::abs(a.median_slope - b.median_slope);
    c.ks_distance = ks_distance(a.slopes, b.slopes);
    c.empty_linear = a.empty_fraction();
    c.empty_nonlinear = b.empty_fraction();
    out.push_back(c);
  }
  return out;
}

/// Rebuilds level summaries from a dimension.csv written by either experiment.
inline ExperimentSummary read_dimension_csv(const fs::path& path, double target) {
  std::ifstream in(path);
  if (!in) throw FormatError("missing input " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("replica,level,y,empty,slope", 0) != 0) throw FormatError(path.string() + ": unexpected header");
  std::vector<std::string> labels;
  std::vector<double> ys;
  std::vector<std::vector<double>> slopes;
  std::vector<int> counts;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() < 5) throw FormatError(path.string() + ": short row '" + line + "'");
    auto it = std::find(labels.begin(), labels.end(), f[1]);
    size_t l = static_cast<size_t>(it - labels.begin());
    if (it == labels.end()) {
      labels.push_back(f[1]);
      ys.push_back(std::stod(f[2]));
      slopes.emplace_back();
      counts.push_back(0);
    }
    ++counts[l];
    if (f[3] == "0") slopes[l].push_back(std::stod(f[4]));
  }
  ExperimentSummary s;
  s.target = target;
  for (size_t l = 0; l < labels.size(); ++l) {
    s.levels.push_back(summarize_level(labels[l], ys[l], slopes[l], counts[l], target));
    s.replicas = counts[l];
  }
  return s;
}

inline std::vector<LevelComparison> write_comparison(const fs::path& dir, const ExperimentSummary& lin,
                                                     const ExperimentSummary& non) {
  const auto cmp = compare_summaries(lin, non);
  fs::create_directories(dir);
  io::CsvWriter w(dir / "comparison.csv", {"level", "median_linear", "median_nonlinear", "median_difference",
                                           "ks_distance", "empty_fraction_linear", "empty_fraction_nonlinear"});
  for (const auto& c : cmp) {
    w.row(c.label, c.median_linear, c.median_nonlinear, c.median_difference, c.ks_distance, c.empty_linear,
          c.empty_nonlinear);
  }
  return cmp;
}

/// Runs (or reuses) both experiments under dir/linear and dir/nonlinear.
inline std::vector<LevelComparison> run_comparison(const ExperimentConfig& cfg, const fs::path& dir,
                                                   bool reuse_existing = true) {
  const fs::path lin_dir = dir / "linear", non_dir = dir / "nonlinear";
  const double target = cfg.params.target_dimension();
  auto fresh = [&](const fs::path& d) {
    return reuse_existing && fs::exists(d / "dimension.csv") && fs::exists(d / "manifest.json") &&
           !fs::exists(d / "FAILED") && load_config((d / "manifest.json").string()).hash() == cfg.hash();
  };
  const ExperimentSummary lin =
      fresh(lin_dir) ? read_dimension_csv(lin_dir / "dimension.csv", target) : run_linear_experiment(cfg, lin_dir);
  const ExperimentSummary non = fresh(non_dir) ? read_dimension_csv(non_dir / "dimension.csv", target)
                                               : run_nonlinear_experiment(cfg, non_dir);
  return write_comparison(dir, lin, non);
}

// ---------------------------------------------------------------------------
// Lemma checks

struct LemmaCheck {
  std::string lemma;
  std::string check;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct LemmaReport {
  std::vector<LemmaCheck> checks;
  // Detail for callers that report individual criteria.
  double mode_variance_max_error = 0.0;
  std::vector<double> sin_sum_bands;       // gamma 0.5, 1, 3 in order
  double log_spread_h2 = 0.0, log_spread_r2 = 0.0;
  double det_min = 0.0, det_min_doubled = 0.0;
  std::vector<double> frostman_mean, frostman_second, frostman_energy;  // per n
  double analytic_structure_slope = 0.0;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.pass; });
  }
  const LemmaCheck* find(const std::string& check) const {
    for (const auto& c : checks) {
      if (c.check == check) return &c;
    }
    return nullptr;
  }
};

inline double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

/// Log-spaced radii in [lo, hi].
inline std::vector<double> log_space(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1)));
  return out;
}

inline LemmaReport verify_lemmas(const ExperimentConfig& cfg, const fs::path& dir) {
  cfg.validate(false);
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");
  const std::string started = utc_timestamp();
  LemmaReport rep;
  const ModelParams& p = cfg.params;
  auto add = [&](std::string lemma, std::string check, double measured, double threshold, bool pass) {
    rep.checks.push_back({std::move(lemma), std::move(check), measured, threshold, pass});
  };

  // Structure function: analytic slope over [1e-2, 1e-1], empirical vs analytic.
  {
    const auto radii = log_space(1e-2, 1e-1, 11);
    std::vector<double> lx, ly;
    for (double r : radii) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(structure_function_analytic(r, 0.0, cfg.time, p, cfg.series_cutoff).value));
    }
    rep.analytic_structure_slope = least_squares(lx, ly).slope;
    add("structure function", "analytic_slope", rep.analytic_structure_slope, 0.05,
        std::abs(rep.analytic_structure_slope - p.structure_exponent()) <= 0.05);
  }
  const auto lags = configured_lags(cfg);
  const auto modes = ModeSet::make(cfg.solver.radius, cfg.solver.shape);
  {
    const GridTransform transform(modes, cfg.solver.grid);
    auto res = parallel_collect<std::vector<double>>(cfg.replicas, cfg.workers, [&](int r) {
      const SeedSpec seed{cfg.master_seed, static_cast<std::uint32_t>(r)};
      const GridField g = transform.synthesize(sample_exact(cfg.time, modes, p, seed, cfg.stationary));
      std::vector<double> m;
      for (const Lag& lag : lags) m.push_back(mean_square_increment(g, lag));
      return m;
    });
    if (res.error) std::rethrow_exception(res.error);
    std::vector<double> means(lags.size(), 0.0);
    for (const auto& item : res.items) {
      for (size_t q = 0; q < lags.size(); ++q) means[q] += (*item)[q] / cfg.replicas;
    }
    const auto est = structure_function_from_means(cfg.solver.grid, lags, means, cfg.replicas);
    io::CsvWriter sf(dir / "structure_function.csv", {"r", "g_analytic", "g_empirical", "n_samples", "rel_error"});
    double worst = 0.0;
    for (const auto& pt : est.points) {
      const double ga = structure_function_analytic(pt.distance, 0.0, cfg.time, p, cfg.series_cutoff).value;
      const double rel = std::abs(pt.value - ga) / ga;
      worst = std::max(worst, rel);
      sf.row(pt.distance, ga, pt.value, cfg.replicas, rel);
    }
    add("structure function", "empirical_vs_analytic_max_rel_error", worst, 0.05, worst <= 0.05);
    add("structure function", "empirical_slope", est.slope, 0.1, std::abs(est.slope - p.structure_exponent()) <= 0.1);
  }

  // Mode variances of the exact sampler.
  {
    const auto small = ModeSet::make(cfg.mode_radius, Truncation::ball);
    auto res = parallel_collect<std::vector<double>>(cfg.mode_samples, cfg.workers, [&](int r) {
      const SeedSpec seed{cfg.master_seed, static_cast<std::uint32_t>(r)};
      const SpectralField z = sample_exact(cfg.time, small, p, seed, cfg.stationary);
      return std::vector<double>(z.coeffs().begin(), z.coeffs().end());
    });
    if (res.error) std::rethrow_exception(res.error);
    io::CsvWriter mv(dir / "mode_variance.csv", {"k1", "k2", "analytic", "empirical", "n"});
    for (size_t i = 0; i < small->size(); ++i) {
      double s2 = 0.0;
      for (const auto& item : res.items) s2 += (*item)[i] * (*item)[i];
      const double emp = s2 / cfg.mode_samples;
      const WaveVector k = (*small)[i];
      const double ana = cfg.stationary ? stationary_mode_variance(k, p) : mode_variance(k, cfg.time, p);
      rep.mode_variance_max_error = std::max(rep.mode_variance_max_error, std::abs(emp - ana) / ana);
      mv.row(k.k1, k.k2, ana, emp, cfg.mode_samples);
    }
    add("mode variance", "max_rel_error", rep.mode_variance_max_error, 0.05, rep.mode_variance_max_error <= 0.05);
  }

  // Sin-sum asymptotics, d = 2, along a fixed generic direction.
  {
    const double theta = 0.3;
    const auto radii = log_space(1e-2, 0.5, 12);
    const std::vector<double> gammas{0.5, 1.0, 2.0, 3.0};
    io::CsvWriter ss(dir / "sin_sum.csv", {"gamma", "r", "sum", "tail_bound", "h_gamma", "ratio_h", "ratio_r2"});
    auto res = parallel_collect<SeriesValue>(static_cast<int>(gammas.size() * radii.size()), cfg.workers, [&](int q) {
      const double g = gammas[q / radii.size()], r = radii[q % radii.size()];
      return sin_sum(r * std::cos(theta), r * std::sin(theta), g, 2, cfg.sin_sum_cutoff);
    });
    if (res.error) std::rethrow_exception(res.error);
    for (size_t gi = 0; gi < gammas.size(); ++gi) {
      std::vector<double> ratio_h, ratio_r2;
      for (size_t ri = 0; ri < radii.size(); ++ri) {
        const auto& v = *res.items[gi * radii.size() + ri];
        const double r = radii[ri], h = h_gamma(r, gammas[gi]);
        ratio_h.push_back(v.value / h);
        ratio_r2.push_back(v.value / (r * r));
        ss.row(gammas[gi], r, v.value, v.tail_bound, h, v.value / h, v.value / (r * r));
      }
      if (gammas[gi] == 2.0) {
        rep.log_spread_h2 = std::log(spread(ratio_h));
        rep.log_spread_r2 = std::log(spread(ratio_r2));
        add("sin sum", "gamma2_log_correction", rep.log_spread_h2, rep.log_spread_r2,
            rep.log_spread_h2 < rep.log_spread_r2);
      } else {
        const double band = spread(ratio_h);
        rep.sin_sum_bands.push_back(band);
        add("sin sum", "band_gamma_" + ExperimentConfig::fmt(gammas[gi]), band, 10.0, band <= 10.0);
      }
    }
  }

  // Covariance determinant over random pairs, at the cutoff and its double.
  {
    const SeedSpec seed{cfg.master_seed, 0};
    auto res = parallel_collect<DeterminantSurvey>(2, cfg.workers, [&](int q) {
      return covariance_det_check(p, cfg.time, cfg.det_pairs, cfg.det_cutoff << q, seed);
    });
    if (res.error) std::rethrow_exception(res.error);
    const auto& a = *res.items[0];
    const auto& b = *res.items[1];
    rep.det_min = a.min_ratio;
    rep.det_min_doubled = b.min_ratio;
    io::CsvWriter dc(dir / "determinant.csv", {"cutoff", "pairs", "min_ratio", "median_ratio", "max_ratio"});
    dc.row(cfg.det_cutoff, static_cast<int>(a.ratios.size()), a.min_ratio, a.median_ratio, a.max_ratio);
    dc.row(cfg.det_cutoff * 2, static_cast<int>(b.ratios.size()), b.min_ratio, b.median_ratio, b.max_ratio);
    add("covariance determinant", "min_ratio_positive", a.min_ratio, 0.0, a.min_ratio > 0.0 && b.min_ratio > 0.0);
    const double change = std::abs(b.min_ratio / a.min_ratio - 1.0);
    add("covariance determinant", "cutoff_doubling_change", change, 0.1, change <= 0.1);
  }

  // Frostman mass and energy on finer syntheses of the linear field.
  {
    const double y = resolve_levels(cfg).front().y;
    const GridTransform fine(modes, cfg.frostman_grid);
    const EnergyKernel kernel(cfg.frostman_grid, cfg.frostman_gamma);
    struct Row {
      std::vector<double> mass, energy, diag;
    };
    auto res = parallel_collect<Row>(cfg.replicas, cfg.workers, [&](int r) {
      const SeedSpec seed{cfg.master_seed, static_cast<std::uint32_t>(r)};
      const GridField g = fine.synthesize(sample_exact(cfg.time, modes, p, seed, cfg.stationary));
      Row row;
      for (double n : cfg.frostman_n) {
        row.mass.push_back(frostman_mass(g, y, n));
        const auto e = frostman_energy(g, y, n, kernel);
        row.energy.push_back(e.energy);
        row.diag.push_back(e.diagonal_bound);
      }
      return row;
    });
    if (res.error) std::rethrow_exception(res.error);
    io::CsvWriter fr(dir / "frostman.csv", {"replica", "n", "mass", "energy_gamma", "gamma", "diagonal_bound"});
    const size_t nn = cfg.frostman_n.size();
    rep.frostman_mean.assign(nn, 0.0);
    rep.frostman_second.assign(nn, 0.0);
    rep.frostman_energy.assign(nn, 0.0);
    for (int r = 0; r < cfg.replicas; ++r) {
      const Row& row = *res.items[r];
      for (size_t q = 0; q < nn; ++q) {
        fr.row(r, cfg.frostman_n[q], row.mass[q], row.energy[q], cfg.frostman_gamma, row.diag[q]);
        rep.frostman_mean[q] += row.mass[q] / cfg.replicas;
        rep.frostman_second[q] += row.mass[q] * row.mass[q] / cfg.replicas;
        rep.frostman_energy[q] += row.energy[q] / cfg.replicas;
      }
    }
    const double s1 = spread(rep.frostman_mean), s2 = spread(rep.frostman_second), s3 = spread(rep.frostman_energy);
    add("frostman", "mass_mean_variation", s1, 2.0, s1 <= 2.0);
    add("frostman", "mass_second_moment_variation", s2, 2.0, s2 <= 2.0);
    const bool finite = std::all_of(rep.frostman_energy.begin(), rep.frostman_energy.end(),
                                    [](double e) { return std::isfinite(e); });
    add("frostman", "energy_mean_variation", s3, 2.0, finite && s3 <= 2.0);
  }

  {
    io::CsvWriter lm(dir / "lemmas.csv", {"lemma", "check", "measured", "threshold", "pass"});
    for (const auto& c : rep.checks) lm.row(c.lemma, c.check, c.measured, c.threshold, c.pass ? 1 : 0);
  }
  write_manifest(dir, "verify-lemmas", cfg, cfg.replicas, started,
                 {"structure_function.csv", "mode_variance.csv", "sin_sum.csv", "determinant.csv", "frostman.csv",
                  "lemmas.csv"});
  return rep;
}

// ---------------------------------------------------------------------------
// Estimator calibration

struct CalibrationReport {
  std::vector<CalibrationResult> sets;
  bool pass = false;
};

inline CalibrationReport run_calibration(const ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string started = utc_timestamp();
  CalibrationReport rep;
  rep.sets = calibrate_estimator(cfg.calibration_grid, cfg.calibration_placements, cfg.master_seed);
  rep.pass = true;
  {
    io::CsvWriter w(dir / "calibration.csv",
                    {"set", "theoretical", "mean_slope", "min_slope", "max_slope", "placements", "pass"});
    for (const auto& s : rep.sets) {
      const bool ok = std::abs(s.mean_slope - s.theoretical) <= 0.05;
      rep.pass = rep.pass && ok;
      w.row(s.name, s.theoretical, s.mean_slope, s.min_slope, s.max_slope, s.placements, ok ? 1 : 0);
    }
  }
  write_manifest(dir, "calibrate-estimator", cfg, cfg.calibration_placements, started, {"calibration.csv"});
  return rep;
}

}  // namespace levelset
