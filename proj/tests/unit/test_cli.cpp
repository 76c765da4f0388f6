#include "config.hpp"
#include "runner.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace gkh::cli {
namespace {

namespace fs = std::filesystem;

std::string fixture(const std::string& name) { return std::string(GKHYBRID_CONFIG_DIR) + "/" + name; }

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(Config, MinimalConfigFillsDefaults) {
  const RunConfig cfg = parse_config("problem.kind = heat\nsolver.variant = lsqr\n");
  EXPECT_EQ(cfg.problem.kind, ProblemKind::heat);
  ASSERT_EQ(cfg.solvers.size(), 1u);
  EXPECT_EQ(cfg.solvers[0].name, "default");
  EXPECT_EQ(cfg.solvers[0].rule, ParamKind::gcv);
  EXPECT_EQ(cfg.solvers[0].omega, 0.8);
  EXPECT_TRUE(cfg.solvers[0].reorth);
  EXPECT_EQ(cfg.prior_for(cfg.solvers[0]), nullptr);
  EXPECT_EQ(cfg.output_dir, "out");
  EXPECT_TRUE(cfg.emit.history_csv);
  const std::string echo = echo_config(cfg);
  EXPECT_NE(echo.find("solver.default.rule = gcv"), std::string::npos) << echo;
}

TEST(Config, UnknownKeyIsNamedWithLine) {
  try {
    parse_config("problem.kind = heat\nsolver.lambda_style = big\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("lambda_style"), std::string::npos) << e.what();
  }
}

TEST(Config, SyntaxAndSemanticErrors) {
  auto line_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("problem.kind = heat\n\nno equals sign\nsolver.rule = gcv\n"), 3);
  EXPECT_EQ(line_of("problem.kind = heat\nsolver.rule = gcv\nsolver.rule = dp\n"), 3);
  EXPECT_EQ(line_of("problem.kind = heat\nsolver.max_iter = ten\n"), 2);
  EXPECT_EQ(line_of("problem.kind = moon\nsolver.rule = gcv\n"), 1);
  EXPECT_THROW(parse_config("problem.kind = heat\n"), ConfigError);
  EXPECT_THROW(parse_config("problem.kind = heat\nsolver.prior = missing\n"), ConfigError);
  EXPECT_THROW(parse_config("problem.kind = heat\nsolver.omega = 2\nsolver.rule = wgcv\n"), ConfigError);
}

TEST(Config, CommentsAndNamedSections) {
  const RunConfig cfg = parse_config(
      "# leading comment\n"
      "problem.kind = seismic   # trailing comment\n"
      "problem.n_side = 16\n"
      "prior.smooth.family = matern\n"
      "prior.smooth.nu = inf\n"
      "prior.smooth.alpha = 0.01\n"
      "solver.a.prior = smooth\n"
      "solver.a.rule = lambda0\n"
      "solver.b.prior = identity\n"
      "solver.b.rule = dp\n"
      "solver.b.delta = auto\n");
  ASSERT_EQ(cfg.solvers.size(), 2u);
  EXPECT_EQ(cfg.solvers[0].rule, ParamKind::fixed);
  EXPECT_EQ(cfg.solvers[0].lambda, 0.0);
  const PriorConfig* p = cfg.prior_for(cfg.solvers[0]);
  ASSERT_NE(p, nullptr);
  EXPECT_TRUE(std::isinf(p->kernel.nu));
  EXPECT_EQ(cfg.prior_for(cfg.solvers[1]), nullptr);
  EXPECT_FALSE(cfg.solvers[1].delta.has_value());
  EXPECT_EQ(cfg.problem.seismic.n_side, 16);
}

TEST(Config, EchoRoundTrips) {
  const RunConfig cfg = load_config(fixture("fig04_seismic_matern.cfg"));
  const std::string echo = echo_config(cfg);
  EXPECT_EQ(echo_config(parse_config(echo)), echo);
}

TEST(Config, SeismicFixtureHasThreeMaternRuns) {
  const RunConfig cfg = load_config(fixture("fig04_seismic_matern.cfg"));
  EXPECT_EQ(cfg.problem.kind, ProblemKind::seismic);
  std::vector<double> nus;
  int baselines = 0;
  for (const auto& s : cfg.solvers) {
    const PriorConfig* p = cfg.prior_for(s);
    EXPECT_EQ(s.rule, ParamKind::optimal);
    if (!p) {
      ++baselines;
      continue;
    }
    EXPECT_EQ(p->kernel.family, KernelFamily::matern);
    EXPECT_DOUBLE_EQ(p->kernel.alpha, 0.01);
    nus.push_back(p->kernel.nu);
  }
  EXPECT_EQ(baselines, 1);
  EXPECT_EQ(nus, (std::vector<double>{0.5, 1.5, 2.5}));
}

TEST(Config, SuperresRulesFixtureHasFiveRules) {
  const RunConfig cfg = load_config(fixture("fig09_superres_rules.cfg"));
  std::vector<ParamKind> rules;
  for (const auto& s : cfg.solvers) rules.push_back(s.rule);
  EXPECT_EQ(rules, (std::vector<ParamKind>{ParamKind::fixed, ParamKind::optimal, ParamKind::dp,
                                          ParamKind::gcv, ParamKind::wgcv}));
}

TEST(Config, EveryFigureHasAFixture) {
  const std::vector<std::string> figures{"fig02", "fig03", "fig04", "fig05", "fig07",
                                         "fig08", "fig09", "fig10", "fig11"};
  for (const auto& fig : figures) {
    bool found = false;
    for (const auto& entry : fs::directory_iterator(GKHYBRID_CONFIG_DIR)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind(fig + "_", 0) == 0 && entry.path().extension() == ".cfg") {
        found = true;
        EXPECT_NO_THROW(load_config(entry.path().string())) << name;
      }
    }
    EXPECT_TRUE(found) << fig;
  }
}

class RunTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gkhybrid_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(RunTest, HeatSpectraFixtureWritesOutputs) {
  const RunConfig cfg = load_config(fixture("fig03_heat_spectra.cfg"));
  RunOptions opts;
  opts.out_dir = dir_.string();
  ASSERT_EQ(run(cfg, opts), 0);
  for (const char* f : {"history_full.csv", "history_none.csv", "gengk_full.csv", "spectra_full.csv",
                        "run.log"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  for (const auto& entry : fs::directory_iterator(dir_)) {
    EXPECT_NE(entry.path().extension(), ".partial") << entry.path();
  }
  // Fixed lambda = 0: the projected objective is the residual, nonincreasing in k.
  const auto rows = read_csv(dir_ / "history_full.csv");
  ASSERT_GT(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "k");
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double res = std::stod(rows[i][2]);
    EXPECT_LE(res, prev * (1.0 + 1e-12)) << i;
    prev = res;
  }
  std::ifstream log(dir_ / "run.log");
  const std::string text((std::istreambuf_iterator<char>(log)), std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("problem.kind = heat"), std::string::npos);
  EXPECT_NE(text.find("seed"), std::string::npos);
  EXPECT_NE(text.find("stop"), std::string::npos);
  const auto spectra = read_csv(dir_ / "spectra_full.csv");
  ASSERT_FALSE(spectra.empty());
  EXPECT_EQ(spectra[0], (std::vector<std::string>{"k", "i", "sigma_b", "sigma_b_sq", "sigma_bbar", "sigma_gsvd"}));
}

TEST_F(RunTest, FailedRunLeavesPartialFiles) {
  const RunConfig cfg = parse_config(
      "problem.kind = superres\nproblem.hi_side = 32\nproblem.noise_level = 0.02\n"
      "prior.family = matern\nprior.nu = 0.5\nprior.alpha = 0.007\nprior.require_psd = true\n"
      "solver.rule = gcv\nsolver.max_iter = 5\n");
  RunOptions opts;
  opts.out_dir = dir_.string();
  EXPECT_NE(run(cfg, opts), 0);
  EXPECT_TRUE(fs::exists(dir_ / "run.log.partial"));
  EXPECT_FALSE(fs::exists(dir_ / "run.log"));
}

TEST_F(RunTest, PicardSubcommandWritesTable) {
  const RunConfig cfg = load_config(fixture("fig02_picard_heat.cfg"));
  RunOptions opts;
  opts.out_dir = dir_.string();
  ASSERT_EQ(picard(cfg, opts), 0);
  const auto rows = read_csv(dir_ / "picard.csv");
  ASSERT_EQ(rows.size(), 65u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"j", "sigma_svd", "coef_svd", "ratio_svd", "sigma_gsvd",
                                               "coef_gsvd", "ratio_gsvd"}));
}

TEST_F(RunTest, SeedOverrideChangesData) {
  RunConfig cfg = parse_config("problem.kind = heat\nproblem.noise_level = 0.01\nsolver.rule = gcv\nsolver.max_iter = 5\n");
  RunOptions a;
  a.out_dir = (dir_ / "a").string();
  a.seed = 1;
  RunOptions b;
  b.out_dir = (dir_ / "b").string();
  b.seed = 2;
  ASSERT_EQ(run(cfg, a), 0);
  ASSERT_EQ(run(cfg, b), 0);
  EXPECT_NE(read_csv(dir_ / "a" / "history_default.csv"), read_csv(dir_ / "b" / "history_default.csv"));
}

TEST(Verify, AllChecksPass) {
  std::ostringstream out;
  EXPECT_EQ(verify(out), 0) << out.str();
  EXPECT_EQ(out.str().find("FAIL"), std::string::npos) << out.str();
}

}  // namespace
}  // namespace gkh::cli
