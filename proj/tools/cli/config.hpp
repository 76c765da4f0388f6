#pragma once

#include "gkhybrid/covariance.hpp"
#include "gkhybrid/problems.hpp"
#include "gkhybrid/projected.hpp"
#include "gkhybrid/regparam.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gkh::cli {

/// Thrown for malformed or invalid configuration; `line` is 1-based, 0 when
/// the problem is not tied to one line.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, int line);
  int line() const noexcept { return line_; }

private:
  int line_;
};

struct ProblemConfig {
  ProblemKind kind = ProblemKind::heat;
  std::uint64_t seed = 0;
  HeatSpec heat;
  SeismicSpec seismic;
  SuperResSpec superres;
  /// Optional truth image for superres, relative to the config file.
  std::string image;
  double noise_level = 0.0;
  bool noise_level_set = false;
};

struct PriorConfig {
  std::string name;
  bool identity = true;
  KernelSpec kernel;
  double padding = 1.0;
  bool require_psd = true;
};

struct SolverConfig {
  std::string name;
  Variant variant = Variant::lsqr;
  ParamKind rule = ParamKind::gcv;
  double lambda = 0.0;
  double omega = 0.8;
  double tau = 1.0;
  /// Empty: use the realized noise energy ||d - d_clean||^2.
  std::optional<double> delta;
  /// Empty: use the realized noise variance.
  std::optional<double> eta2;
  StopRule stop;
  bool reorth = true;
  std::string prior;  // empty: the default prior, or identity when none
  double mu = 0.0;
};

struct EmitConfig {
  bool history_csv = true;
  bool picard_csv = false;
  bool images = false;
  bool diagnostics = false;
  std::vector<Index> spectra_k{5, 20, 35, 50};
};

struct RunConfig {
  ProblemConfig problem;
  std::vector<PriorConfig> priors;
  std::vector<SolverConfig> solvers;
  std::string output_dir = "out";
  EmitConfig emit;
  /// Directory of the config file, for relative paths.
  std::string base_dir = ".";

  const PriorConfig* find_prior(const std::string& name) const;
  /// Prior used by a solver (nullptr means identity).
  const PriorConfig* prior_for(const SolverConfig& s) const;
};

/// Parses the line-oriented `key = value` format. `#` starts a comment.
/// Keys are `problem.<key>`, `prior[.<name>].<key>`, `solver[.<name>].<key>`,
/// `output.<key>` and `emit.<key>`.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical listing of every effective setting, one `key = value` per line.
std::string echo_config(const RunConfig& cfg);

}  // namespace gkh::cli
