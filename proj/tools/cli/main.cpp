#include "config.hpp"
#include "runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"gkhybrid: generalized hybrid iterative solvers for Bayesian inverse problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Build the configured problem and run every solver");
  run->add_option("config", config_path, "Configuration file")->required();
  auto* run_out = run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  auto* run_seed = run->add_option("--seed", seed, "Problem seed (overrides problem.seed)");

  auto* pic = app.add_subcommand("picard", "Write Picard-plot data for the configured problem");
  pic->add_option("config", config_path, "Configuration file")->required();
  auto* pic_out = pic->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  auto* pic_seed = pic->add_option("--seed", seed, "Problem seed (overrides problem.seed)");

  app.add_subcommand("verify", "Run invariant checks on small problems");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("verify")) return gkh::cli::verify(std::cout);

  const bool is_run = app.got_subcommand("run");
  gkh::cli::RunOptions opts;
  opts.progress = &std::cerr;
  if (*(is_run ? run_out : pic_out)) opts.out_dir = out_dir;
  if (*(is_run ? run_seed : pic_seed)) opts.seed = seed;
  try {
    const auto cfg = gkh::cli::load_config(config_path);
    return is_run ? gkh::cli::run(cfg, opts) : gkh::cli::picard(cfg, opts);
  } catch (const gkh::cli::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return 2;
  }
}
