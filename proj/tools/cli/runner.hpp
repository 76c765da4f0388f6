#pragma once

#include "config.hpp"

#include "gkhybrid/hybrid.hpp"
#include "gkhybrid/problems.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace gkh::cli {

struct RunOptions {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  /// Progress messages; nullptr silences them.
  std::ostream* progress = nullptr;
};

ProblemInstance build_problem(const RunConfig& cfg, std::uint64_t seed);
/// Identity when prior is nullptr.
OperatorPtr build_prior(const PriorConfig* prior, const ProblemInstance& inst);
HybridOptions solver_options(const SolverConfig& s, const ProblemInstance& inst);

/// Writes history CSVs, optional Picard data, images and diagnostics plus
/// run.log into the output directory. Returns the process exit status; on
/// failure the files written so far keep a `.partial` suffix.
int run(const RunConfig& cfg, const RunOptions& opts);

/// Picard table for the configured problem and default prior (dense, n <= 512).
int picard(const RunConfig& cfg, const RunOptions& opts);

/// Invariant checks on small problems; one PASS/FAIL line each.
int verify(std::ostream& out);

}  // namespace gkh::cli
