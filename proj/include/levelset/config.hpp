#pragma once

// Experiment configuration: flat "section.key = value" text, a canonical
// serialization (the basis of the config hash) and up-front validation.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "levelset/galerkin.hpp"
#include "levelset/linear.hpp"

namespace levelset {

/// A level given either absolutely or as a multiple of the pointwise
/// standard deviation of the linear field.
struct LevelSpec {
  double value = 0.0;
  bool sigma_units = false;

  bool operator==(const LevelSpec&) const = default;
};

struct ExperimentConfig {
  ModelParams params{};
  SolverConfig solver{};
  std::uint64_t master_seed = 20130819;
  int replicas = 200;
  double time = 1.0;  // observation time of the linear field
  std::vector<LevelSpec> levels{{0.0, false}, {0.5, true}};
  bool stationary = false;
  double initial_l2 = 0.0;  // |theta_0|_L2; 0 starts from rest
  int workers = 0;          // 0: one per hardware thread
  std::string output = "out";
  bool unsupported_regime = false;

  // Analysis settings.
  std::vector<int> lags{2, 3, 4, 6, 8, 11, 16, 23, 32};  // grid cells, along both axes
  int series_cutoff = 512;
  std::vector<double> frostman_n{10.0, 100.0, 1000.0, 10000.0};
  double frostman_gamma = 1.1;
  int frostman_grid = 1024;
  std::vector<double> occupation_eps{0.2, 0.1, 0.05, 0.02};
  int mode_samples = 10000;
  int mode_radius = 4;
  int det_pairs = 1000;
  int det_cutoff = 128;
  int sin_sum_cutoff = 2048;
  int calibration_grid = 512;
  int calibration_placements = 16;

  /// Throws ParameterError / ResolutionError naming the violated constraint.
  void validate(bool nonlinear = false) const {
    if (unsupported_regime) {
      if (!(params.nu > 0.0)) throw ParameterError("params.nu > 0 violated");
    } else {
      params.validate();
      if (nonlinear && !(params.alpha > 1.0)) {
        throw ParameterError("alpha > 1 violated for the nonlinear problem (alpha = " + fmt(params.alpha) + ")");
      }
    }
    solver.validate();
    if (solver.grid < 2 * solver.radius + 2) throw ResolutionError("solver.grid >= 2 solver.N + 2 violated");
    if (replicas < 1) throw ParameterError("experiment.replicas >= 1 violated");
    if (!(time > 0.0)) throw ParameterError("experiment.time > 0 violated");
    if (levels.empty()) throw ParameterError("experiment.levels must not be empty");
    if (!(initial_l2 >= 0.0)) throw ParameterError("solver.initial_l2 >= 0 violated");
    if (workers < 0) throw ParameterError("experiment.workers >= 0 violated");
    for (int l : lags) {
      if (l < 1 || l >= solver.grid / 2) throw ParameterError("analysis.lags must lie in [1, grid/2)");
    }
    if (series_cutoff < 1) throw ParameterError("analysis.series_cutoff >= 1 violated");
    for (double n : frostman_n) {
      if (!(n > 0.0)) throw ParameterError("analysis.frostman_n > 0 violated");
    }
    if (!(frostman_gamma > 0.0 && frostman_gamma < 2.0)) throw ParameterError("analysis.frostman_gamma in (0, 2) violated");
    if (frostman_grid < 2 * solver.radius + 2 || (frostman_grid & (frostman_grid - 1)) != 0) {
      throw ResolutionError("analysis.frostman_grid must be a power of two >= 2 solver.N + 2");
    }
    for (double e : occupation_eps) {
      if (!(e > 0.0)) throw ParameterError("analysis.occupation_eps > 0 violated");
    }
    if (mode_samples < 2) throw ParameterError("analysis.mode_samples >= 2 violated");
    if (mode_radius < 1) throw ParameterError("analysis.mode_radius >= 1 violated");
    if (det_pairs < 1) throw ParameterError("analysis.det_pairs >= 1 violated");
    if (det_cutoff < 1) throw ParameterError("analysis.det_cutoff >= 1 violated");
    if (sin_sum_cutoff < 1) throw ParameterError("analysis.sin_sum_cutoff >= 1 violated");
    if (calibration_grid < 16 || (calibration_grid & (calibration_grid - 1)) != 0) {
      throw ResolutionError("analysis.calibration_grid must be a power of two >= 16");
    }
    if (calibration_placements < 1) throw ParameterError("analysis.calibration_placements >= 1 violated");
  }

  /// Canonical text; parse(to_text()) reproduces the config exactly.
  std::string to_text() const {
    std::ostringstream os;
    auto put = [&](const char* key, const std::string& v) { os << key << " = " << v << '\n'; };
    put("params.nu", fmt(params.nu));
    put("params.alpha", fmt(params.alpha));
    put("params.M", fmt(params.m_exponent));
    put("noise.delta", fmt(params.noise.delta));
    put("noise.amplitude", fmt(params.noise.amplitude));
    put("seed.master", std::to_string(master_seed));
    put("solver.N", std::to_string(solver.radius));
    put("solver.grid", std::to_string(solver.grid));
    put("solver.dt", fmt(solver.dt));
    put("solver.T", fmt(solver.horizon));
    put("solver.guard", fmt(solver.guard));
    put("solver.shape", to_string(solver.shape));
    put("solver.record_every", std::to_string(solver.record_every));
    put("solver.nonlinear", solver.nonlinear ? "true" : "false");
    put("solver.initial_l2", fmt(initial_l2));
    put("experiment.replicas", std::to_string(replicas));
    put("experiment.time", fmt(time));
    put("experiment.levels", join_levels());
    put("experiment.stationary", stationary ? "true" : "false");
    put("experiment.workers", std::to_string(workers));
    put("experiment.output", output);
    put("experiment.unsupported_regime", unsupported_regime ? "true" : "false");
    put("analysis.lags", join(lags));
    put("analysis.series_cutoff", std::to_string(series_cutoff));
    put("analysis.frostman_n", join(frostman_n));
    put("analysis.frostman_gamma", fmt(frostman_gamma));
    put("analysis.frostman_grid", std::to_string(frostman_grid));
    put("analysis.occupation_eps", join(occupation_eps));
    put("analysis.mode_samples", std::to_string(mode_samples));
    put("analysis.mode_radius", std::to_string(mode_radius));
    put("analysis.det_pairs", std::to_string(det_pairs));
    put("analysis.det_cutoff", std::to_string(det_cutoff));
    put("analysis.sin_sum_cutoff", std::to_string(sin_sum_cutoff));
    put("analysis.calibration_grid", std::to_string(calibration_grid));
    put("analysis.calibration_placements", std::to_string(calibration_placements));
    return os.str();
  }

  /// Reads "section.key = value" lines; '#' starts a comment. Keys not
  /// present keep their defaults; unknown keys are an error.
  static ExperimentConfig parse(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno);
    }
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  void set(const std::string& key, const std::string& v, int lineno = 0) {
    try {
      if (key == "params.nu") params.nu = real(v);
      else if (key == "params.alpha") params.alpha = real(v);
      else if (key == "params.M") params.m_exponent = real(v);
      else if (key == "noise.delta") params.noise.delta = real(v);
      else if (key == "noise.amplitude") params.noise.amplitude = real(v);
      else if (key == "seed.master") master_seed = std::stoull(v);
      else if (key == "solver.N") solver.radius = integer(v);
      else if (key == "solver.grid") solver.grid = integer(v);
      else if (key == "solver.dt") solver.dt = real(v);
      else if (key == "solver.T") solver.horizon = real(v);
      else if (key == "solver.guard") solver.guard = real(v);
      else if (key == "solver.shape") solver.shape = parse_truncation(v);
      else if (key == "solver.record_every") solver.record_every = integer(v);
      else if (key == "solver.nonlinear") solver.nonlinear = boolean(v);
      else if (key == "solver.initial_l2") initial_l2 = real(v);
      else if (key == "experiment.replicas") replicas = integer(v);
      else if (key == "experiment.time") time = real(v);
      else if (key == "experiment.levels") levels = parse_levels(v);
      else if (key == "experiment.stationary") stationary = boolean(v);
      else if (key == "experiment.workers") workers = integer(v);
      else if (key == "experiment.output") output = v;
      else if (key == "experiment.unsupported_regime") unsupported_regime = boolean(v);
      else if (key == "analysis.lags") lags = list<int>(v);
      else if (key == "analysis.series_cutoff") series_cutoff = integer(v);
      else if (key == "analysis.frostman_n") frostman_n = list<double>(v);
      else if (key == "analysis.frostman_gamma") frostman_gamma = real(v);
      else if (key == "analysis.frostman_grid") frostman_grid = integer(v);
      else if (key == "analysis.occupation_eps") occupation_eps = list<double>(v);
      else if (key == "analysis.mode_samples") mode_samples = integer(v);
      else if (key == "analysis.mode_radius") mode_radius = integer(v);
      else if (key == "analysis.det_pairs") det_pairs = integer(v);
      else if (key == "analysis.det_cutoff") det_cutoff = integer(v);
      else if (key == "analysis.sin_sum_cutoff") sin_sum_cutoff = integer(v);
      else if (key == "analysis.calibration_grid") calibration_grid = integer(v);
      else if (key == "analysis.calibration_placements") calibration_placements = integer(v);
      else throw FormatError("unknown key");
    } catch (const FormatError& e) {
      throw FormatError("config line " + std::to_string(lineno) + " (" + key + " = " + v + "): " + e.what());
    } catch (const std::logic_error&) {
      throw FormatError("config line " + std::to_string(lineno) + ": cannot parse value of " + key + " from '" + v + "'");
    }
  }

  /// FNV-1a 64 of the canonical text.
  std::uint64_t hash() const { return fnv1a(to_text()); }

  static std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  static double real(const std::string& v) {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  }
  static int integer(const std::string& v) {
    size_t used = 0;
    const int i = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  }
  static bool boolean(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument(v);
  }

  static std::vector<std::string> split(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  template <class T>
  static std::vector<T> list(const std::string& v) {
    std::vector<T> out;
    for (const auto& s : split(v)) {
      if constexpr (std::is_same_v<T, int>) out.push_back(integer(s));
      else out.push_back(real(s));
    }
    return out;
  }

  template <class T>
  static std::string join(const std::vector<T>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
      if (i) out += ", ";
      if constexpr (std::is_same_v<T, int>) out += std::to_string(xs[i]);
      else out += fmt(xs[i]);
    }
    return out;
  }

  /// "0, 0.5sigma, -0.2": a "sigma" suffix selects sigma units.
  static std::vector<LevelSpec> parse_levels(const std::string& v) {
    std::vector<LevelSpec> out;
    for (auto s : split(v)) {
      LevelSpec l;
      if (s.size() > 5 && s.compare(s.size() - 5, 5, "sigma") == 0) {
        l.sigma_units = true;
        s = trim(s.substr(0, s.size() - 5));
      }
      l.value = real(s);
      out.push_back(l);
    }
    return out;
  }

  std::string join_levels() const {
    std::string out;
    for (size_t i = 0; i < levels.size(); ++i) {
      if (i) out += ", ";
      out += fmt(levels[i].value) + (levels[i].sigma_units ? "sigma" : "");
    }
    return out;
  }
};

}  // namespace levelset
