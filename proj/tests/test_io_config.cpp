#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace levelset;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "levelset_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void expect_message(const std::string& text, const std::string& fragment) {
  try {
    ExperimentConfig::parse(text).validate(true);
    FAIL() << "accepted: " << text;
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(GridFile, RoundTripIsBitExact) {
  const auto g = synthesize(testing_support::random_field(ModeSet::make(10), 2), 32);
  const auto path = scratch("a.grid");
  io::write_grid(path, g);
  EXPECT_EQ(fs::file_size(path), std::string("levelset-lab grid v1 N_g=32\n").size() + 32 * 32 * 8);
  const auto back = io::read_grid(path);
  EXPECT_EQ(back.size(), 32);
  EXPECT_TRUE(std::equal(back.values().begin(), back.values().end(), g.values().begin(), g.values().end()));
}

TEST(GridFile, RejectsMalformedInput) {
  const auto g = synthesize(testing_support::random_field(ModeSet::make(4), 2), 16);
  const auto path = scratch("b.grid");
  io::write_grid(path, g);
  const std::string good = slurp(path);
  auto write = [&](const std::string& s) {
    std::ofstream(path, std::ios::binary) << s;
  };
  write(good.substr(0, good.size() - 3));
  EXPECT_THROW(io::read_grid(path), FormatError);
  write(good + "x");
  EXPECT_THROW(io::read_grid(path), FormatError);
  write("grid 16\n" + good.substr(good.find('\n') + 1));
  EXPECT_THROW(io::read_grid(path), FormatError);
  EXPECT_THROW(io::read_grid(scratch("missing.grid")), FormatError);
}

TEST(SpectralFile, RoundTripIsExact) {
  for (auto shape : {Truncation::ball, Truncation::square}) {
    const auto f = testing_support::random_field(ModeSet::make(9, shape), 5);
    const auto path = scratch("c.spec");
    io::write_spectral(path, f);
    EXPECT_EQ(io::read_spectral(path), f);
  }
}

TEST(SpectralFile, RejectsForeignOrMisorderedModes) {
  const auto f = testing_support::random_field(ModeSet::make(2), 5);
  const auto path = scratch("d.spec");
  io::write_spectral(path, f);
  std::string text = slurp(path);
  std::ofstream(path) << text << "3 3 1.0\n";
  EXPECT_THROW(io::read_spectral(path), FormatError);
  // Swap two body lines.
  const auto first = text.find('\n') + 1;
  const auto second = text.find('\n', first) + 1;
  const auto third = text.find('\n', second) + 1;
  const std::string swapped =
      text.substr(0, first) + text.substr(second, third - second) + text.substr(first, second - first) + text.substr(third);
  std::ofstream(path) << swapped;
  EXPECT_THROW(io::read_spectral(path), FormatError);
  std::ofstream(path) << text.substr(0, third);
  EXPECT_THROW(io::read_spectral(path), FormatError);
}

TEST(Csv, NumbersAndRows) {
  EXPECT_EQ(io::num(0.1), "0.1");
  EXPECT_EQ(io::num(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(io::num(7), "7");
  const auto path = scratch("e.csv");
  {
    io::CsvWriter w(path, {"a", "b", "c"});
    w.row(1, 2.5, "x");
  }
  EXPECT_EQ(slurp(path), "a,b,c\n1,2.5,x\n");
}

TEST(Config, DefaultsMatchTheReferenceRegime) {
  const ExperimentConfig c;
  EXPECT_EQ(c.params.nu, 1.0);
  EXPECT_EQ(c.params.alpha, 1.5);
  EXPECT_EQ(c.params.m_exponent, 1.0);
  EXPECT_EQ(c.params.noise.delta, 0.25);
  EXPECT_EQ(c.solver.radius, 85);
  EXPECT_EQ(c.solver.grid, 256);
  EXPECT_EQ(c.solver.dt, 1e-3);
  EXPECT_EQ(c.solver.horizon, 1.0);
  EXPECT_EQ(c.solver.guard, 1e6);
  EXPECT_EQ(c.replicas, 200);
  EXPECT_NO_THROW(c.validate(true));
}

TEST(Config, TextRoundTripAndHash) {
  ExperimentConfig c;
  c.params.noise.delta = 0.1 + 0.2;
  c.levels = {{-0.3, false}, {1.5, true}};
  c.lags = {1, 7};
  c.master_seed = 18446744073709551615ull;
  c.solver.shape = Truncation::square;
  const auto back = ExperimentConfig::parse(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.params.noise.delta, c.params.noise.delta);
  EXPECT_EQ(back.levels, c.levels);
  EXPECT_EQ(back.hash(), c.hash());
  ExperimentConfig d = c;
  d.replicas += 1;
  EXPECT_NE(d.hash(), c.hash());
  EXPECT_EQ(ExperimentConfig::fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(ExperimentConfig::fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Config, ParsesCommentsAndLevels) {
  const auto c = ExperimentConfig::parse(
      "# reduced run\n"
      "  experiment.replicas = 12   # small\n"
      "experiment.levels = 0, 0.5sigma, -0.25\n"
      "solver.nonlinear = false\n\n");
  EXPECT_EQ(c.replicas, 12);
  ASSERT_EQ(c.levels.size(), 3u);
  EXPECT_EQ(c.levels[1], (LevelSpec{0.5, true}));
  EXPECT_EQ(c.levels[2], (LevelSpec{-0.25, false}));
  EXPECT_FALSE(c.solver.nonlinear);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ExperimentConfig::parse("solver.nn = 3\n"), FormatError);
  EXPECT_THROW(ExperimentConfig::parse("solver.N = 3.5\n"), FormatError);
  EXPECT_THROW(ExperimentConfig::parse("solver.nonlinear = maybe\n"), FormatError);
  EXPECT_THROW(ExperimentConfig::parse("just text\n"), FormatError);
  try {
    ExperimentConfig::parse("\nparams.nu = 1\nbogus = 2\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, ValidationNamesTheInequality) {
  expect_message("noise.delta = 0.9\n", "delta in (1-alpha, 2-alpha)");
  expect_message("params.alpha = 1\nnoise.delta = 0.5\n", "alpha > 1");
  expect_message("solver.grid = 128\n", "solver.grid >= 3 solver.N");
  expect_message("solver.dt = 0\n", "solver.dt > 0");
  expect_message("experiment.replicas = 0\n", "experiment.replicas >= 1");
  expect_message("analysis.lags = 2, 128\n", "analysis.lags");
  expect_message("analysis.frostman_gamma = 2\n", "frostman_gamma");
  EXPECT_NO_THROW(ExperimentConfig::parse("params.alpha = 1\nnoise.delta = 0.5\n").validate(false));
  EXPECT_NO_THROW(
      ExperimentConfig::parse("params.alpha = 1\nparams.M = 0.5\nexperiment.unsupported_regime = true\n").validate(true));
}
