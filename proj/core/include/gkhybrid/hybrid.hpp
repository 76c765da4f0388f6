#pragma once

#include "gkhybrid/gengk.hpp"
#include "gkhybrid/projected.hpp"
#include "gkhybrid/regparam.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace gkh {

struct HybridOptions {
  Variant variant = Variant::lsqr;
  ParamRule param_rule = ParamRule::gcv();
  StopRule stop_rule;
  bool reorth = true;
  /// Prior mean; empty means zero.
  Vector mu;
  /// Truth for per-iteration relative errors (and the optimal rule).
  std::optional<Vector> record_errors_against;
};

struct HybridResult {
  SolveRecord record;
  /// The bidiagonalization that produced the record; independent of lambda.
  std::shared_ptr<const GenGK> basis;
};

/// Generalized hybrid solve of min ||A s - d||^2_{R^{-1}} + lambda^2 ||s - mu||^2_{Q^{-1}}
/// with lambda re-selected on the projected problem every iteration.
HybridResult solve(OperatorPtr a, const NoiseModel& r, OperatorPtr q, const Vector& d,
                   const HybridOptions& opts);

struct ErrorSummary {
  Index min_error_iteration = 0;
  double min_error = 0.0;
  double terminal_error = 0.0;
};

struct SemiconvergenceReport {
  ErrorSummary unregularized;
  ErrorSummary hybrid;
  /// Terminal error of the lambda = 0 run exceeds its minimum by more than 10%.
  bool unregularized_semiconverges = false;
  /// Same test applied to the hybrid run.
  bool hybrid_semiconverges = false;
};

ErrorSummary summarize_errors(const SolveRecord& record);
bool exhibits_semiconvergence(const SolveRecord& record, double factor = 1.1);
SemiconvergenceReport semiconvergence_probe(const SolveRecord& lambda0,
                                            const SolveRecord& hybrid);

/// CSV with a version comment line and columns k,lambda,resnorm,znorm,gcv,relerr,reason.
void write_history_csv(std::ostream& out, const SolveRecord& record);
inline constexpr const char* kHistoryCsvVersion = "# gkhybrid history v1";

}  // namespace gkh
