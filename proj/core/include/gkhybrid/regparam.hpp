#pragma once

#include "gkhybrid/projected.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gkh {

enum class ParamKind { fixed, optimal, gcv, wgcv, dp, upre };

std::string to_string(ParamKind k);
ParamKind parse_param_kind(const std::string& s);

struct ParamRule {
  ParamKind kind = ParamKind::gcv;
  double lambda_fixed = 0.0;
  double omega = 0.8;
  double tau = 1.0;
  double delta = 0.0;
  double eta2 = 0.0;

  static ParamRule fixed(double lambda);
  static ParamRule optimal();
  static ParamRule gcv();
  static ParamRule wgcv(double omega = 0.8);
  static ParamRule dp(double delta, double tau = 1.0);
  static ParamRule upre(double eta2);

  void validate() const;
  std::string describe() const;
};

struct StopRule {
  int max_iter = 100;
  /// Window for the iteration-indexed GCV test; 0 disables it.
  int gcv_window = 0;
  double gcv_flat_tol = 1e-6;
  /// Stop when the projected residual norm falls below residual_tol * beta_1.
  std::optional<double> residual_tol;

  void validate() const;
};

/// log10(lambda) search bracket and seed grid.
inline constexpr double kLogLambdaMin = -10.0;
inline constexpr double kLogLambdaMax = 10.0;
inline constexpr int kSeedGridPoints = 41;

double gcv_projected(const ProjectedProblem& pp, double lambda);
double wgcv_projected(const ProjectedProblem& pp, double lambda, double omega);
double upre_projected(const ProjectedProblem& pp, double lambda, double eta2);

enum class DpStatus { ok, too_early, too_late };

struct DpResult {
  DpStatus status = DpStatus::ok;
  double lambda = 0.0;
};

/// lambda with residual^2(lambda) = tau * delta, by bisection in log lambda.
/// too_early: residual^2(0) already exceeds the target. too_late: the target
/// exceeds ||rhs||^2, the full-damping limit.
DpResult dp_solve(const ProjectedProblem& pp, double tau, double delta);

/// Returns per-lambda reconstruction error for kind = optimal.
using ErrorOfCoefficients = std::function<double(const Vector& z)>;

struct SelectionContext {
  ErrorOfCoefficients error_of;
};

struct Selection {
  double lambda = 0.0;
  /// Criterion value at the returned lambda (NaN for fixed and dp).
  double value = 0.0;
  std::optional<DpStatus> dp_status;
};

/// Golden-section refinement on log10(lambda) in [-10, 10], seeded by a
/// 41-point grid; never returns a point worse than the best grid point.
struct ScalarMinimum {
  double log_lambda = 0.0;
  double value = 0.0;
};
ScalarMinimum minimize_log_lambda(const std::function<double(double)>& f);

Selection select_lambda(const ParamRule& rule, const ProjectedProblem& pp,
                        const SelectionContext& context = {});

struct IterationRow {
  Index k = 0;
  double lambda = 0.0;
  double residual_norm = 0.0;
  double solution_seminorm = 0.0;
  double gcv = 0.0;
  double relative_error = 0.0;  // NaN when no truth is supplied
  std::string note;
};

struct SolveRecord {
  std::vector<IterationRow> rows;
  std::string stop_reason;
  Vector solution;
  Vector final_z;
  double beta1 = 0.0;
};

struct StopDecision {
  bool stop = false;
  std::string reason;
};

StopDecision should_stop(const SolveRecord& history, const StopRule& rule);

}  // namespace gkh
