#include "gkhybrid/regparam.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gkh {

std::string to_string(ParamKind k) {
  switch (k) {
    case ParamKind::fixed: return "fixed";
    case ParamKind::optimal: return "optimal";
    case ParamKind::gcv: return "gcv";
    case ParamKind::wgcv: return "wgcv";
    case ParamKind::dp: return "dp";
    case ParamKind::upre: return "upre";
  }
  return "unknown";
}

ParamKind parse_param_kind(const std::string& s) {
  if (s == "fixed") return ParamKind::fixed;
  if (s == "optimal" || s == "opt") return ParamKind::optimal;
  if (s == "gcv") return ParamKind::gcv;
  if (s == "wgcv") return ParamKind::wgcv;
  if (s == "dp") return ParamKind::dp;
  if (s == "upre") return ParamKind::upre;
  throw std::invalid_argument("unknown parameter rule '" + s + "'");
}

ParamRule ParamRule::fixed(double lambda) {
  ParamRule r;
  r.kind = ParamKind::fixed;
  r.lambda_fixed = lambda;
  r.validate();
  return r;
}
ParamRule ParamRule::optimal() {
  ParamRule r;
  r.kind = ParamKind::optimal;
  return r;
}
ParamRule ParamRule::gcv() {
  ParamRule r;
  r.kind = ParamKind::gcv;
  return r;
}
ParamRule ParamRule::wgcv(double omega) {
  ParamRule r;
  r.kind = ParamKind::wgcv;
  r.omega = omega;
  r.validate();
  return r;
}
ParamRule ParamRule::dp(double delta, double tau) {
  ParamRule r;
  r.kind = ParamKind::dp;
  r.delta = delta;
  r.tau = tau;
  r.validate();
  return r;
}
ParamRule ParamRule::upre(double eta2) {
  ParamRule r;
  r.kind = ParamKind::upre;
  r.eta2 = eta2;
  r.validate();
  return r;
}

void ParamRule::validate() const {
  switch (kind) {
    case ParamKind::fixed:
      if (!(lambda_fixed >= 0.0)) throw std::invalid_argument("rule fixed: lambda must be >= 0");
      break;
    case ParamKind::wgcv:
      if (!(omega > 0.0 && omega <= 1.0)) throw std::invalid_argument("rule wgcv: omega must be in (0, 1]");
      break;
    case ParamKind::dp:
      if (!(tau >= 1.0)) throw std::invalid_argument("rule dp: tau must be >= 1");
      if (!(delta > 0.0)) throw std::invalid_argument("rule dp: delta must be positive");
      break;
    case ParamKind::upre:
      if (!(eta2 > 0.0)) throw std::invalid_argument("rule upre: eta2 must be positive");
      break;
    case ParamKind::optimal:
    case ParamKind::gcv:
      break;
  }
}

std::string ParamRule::describe() const {
  std::ostringstream s;
  s.precision(17);
  s << to_string(kind);
  switch (kind) {
    case ParamKind::fixed: s << "(lambda=" << lambda_fixed << ")"; break;
    case ParamKind::wgcv: s << "(omega=" << omega << ")"; break;
    case ParamKind::dp: s << "(tau=" << tau << ", delta=" << delta << ")"; break;
    case ParamKind::upre: s << "(eta2=" << eta2 << ")"; break;
    default: break;
  }
  return s.str();
}

void StopRule::validate() const {
  if (max_iter < 1) throw std::invalid_argument("stop rule: max_iter must be >= 1");
  if (gcv_window < 0) throw std::invalid_argument("stop rule: gcv_window must be >= 0");
  if (!(gcv_flat_tol >= 0.0)) throw std::invalid_argument("stop rule: gcv_flat_tol must be >= 0");
  if (residual_tol && !(*residual_tol >= 0.0)) {
    throw std::invalid_argument("stop rule: residual_tol must be >= 0");
  }
}

double wgcv_projected(const ProjectedProblem& pp, double lambda, double omega) {
  const double k = static_cast<double>(pp.k());
  const double denom = (k + 1.0) - omega * pp.filter_trace(lambda);
  return k * pp.residual_squared(lambda) / (denom * denom);
}

double gcv_projected(const ProjectedProblem& pp, double lambda) {
  return wgcv_projected(pp, lambda, 1.0);
}

double upre_projected(const ProjectedProblem& pp, double lambda, double eta2) {
  const double k = static_cast<double>(pp.k());
  return pp.residual_squared(lambda) / k + 2.0 * eta2 / k * pp.filter_trace(lambda) - eta2;
}

DpResult dp_solve(const ProjectedProblem& pp, double tau, double delta) {
  const double target = tau * delta;
  if (!(target > 0.0)) throw std::invalid_argument("dp_solve: tau * delta must be positive");
  if (pp.residual_squared(0.0) > target) return {DpStatus::too_early, 0.0};
  const double full = pp.rhs_scale() * pp.rhs_scale();
  if (target >= full) return {DpStatus::too_late, std::pow(10.0, kLogLambdaMax)};

  double lo = kLogLambdaMin;
  double hi = kLogLambdaMax;
  if (pp.residual_squared(std::pow(10.0, lo)) >= target) return {DpStatus::ok, std::pow(10.0, lo)};
  if (pp.residual_squared(std::pow(10.0, hi)) <= target) return {DpStatus::ok, std::pow(10.0, hi)};
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double r2 = pp.residual_squared(std::pow(10.0, mid));
    if (std::abs(r2 - target) <= 1e-13 * target) break;
    if (r2 < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-15) break;
  }
  return {DpStatus::ok, std::pow(10.0, mid)};
}

ScalarMinimum minimize_log_lambda(const std::function<double(double)>& f) {
  const double step = (kLogLambdaMax - kLogLambdaMin) / (kSeedGridPoints - 1);
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> vals(kSeedGridPoints);
  for (int i = 0; i < kSeedGridPoints; ++i) {
    vals[i] = f(kLogLambdaMin + step * i);
    if (vals[i] < best_val) {
      best_val = vals[i];
      best = i;
    }
  }
  ScalarMinimum grid_best{kLogLambdaMin + step * best, best_val};
  if (!std::isfinite(best_val)) return grid_best;

  double a = kLogLambdaMin + step * std::max(best - 1, 0);
  double b = kLogLambdaMin + step * std::min(best + 1, kSeedGridPoints - 1);
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-10; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = f(x2);
    }
  }
  const ScalarMinimum refined = f1 <= f2 ? ScalarMinimum{x1, f1} : ScalarMinimum{x2, f2};
  return refined.value <= grid_best.value ? refined : grid_best;
}

Selection select_lambda(const ParamRule& rule, const ProjectedProblem& pp,
                        const SelectionContext& context) {
  rule.validate();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  switch (rule.kind) {
    case ParamKind::fixed:
      return {rule.lambda_fixed, nan, std::nullopt};
    case ParamKind::gcv: {
      const auto m = minimize_log_lambda(
          [&](double t) { return gcv_projected(pp, std::pow(10.0, t)); });
      return {std::pow(10.0, m.log_lambda), m.value, std::nullopt};
    }
    case ParamKind::wgcv: {
      const auto m = minimize_log_lambda(
          [&](double t) { return wgcv_projected(pp, std::pow(10.0, t), rule.omega); });
      return {std::pow(10.0, m.log_lambda), m.value, std::nullopt};
    }
    case ParamKind::upre: {
      const auto m = minimize_log_lambda(
          [&](double t) { return upre_projected(pp, std::pow(10.0, t), rule.eta2); });
      return {std::pow(10.0, m.log_lambda), m.value, std::nullopt};
    }
    case ParamKind::dp: {
      const DpResult r = dp_solve(pp, rule.tau, rule.delta);
      return {r.lambda, nan, r.status};
    }
    case ParamKind::optimal: {
      if (!context.error_of) {
        throw std::invalid_argument("rule optimal: requires a truth-based error function");
      }
      const auto m = minimize_log_lambda(
          [&](double t) { return context.error_of(pp.solve(std::pow(10.0, t)).z); });
      return {std::pow(10.0, m.log_lambda), m.value, std::nullopt};
    }
  }
  return {0.0, nan, std::nullopt};
}

StopDecision should_stop(const SolveRecord& history, const StopRule& rule) {
  if (history.rows.empty()) throw std::invalid_argument("should_stop: empty history");
  const auto& last = history.rows.back();
  if (last.k >= rule.max_iter) return {true, "max_iter"};
  if (rule.residual_tol && last.residual_norm <= *rule.residual_tol * history.beta1) {
    return {true, "residual_tol"};
  }
  const auto w = static_cast<std::size_t>(rule.gcv_window);
  const auto n = history.rows.size();
  if (w > 0 && n > w) {
    bool increasing = true;
    bool flat = true;
    for (std::size_t j = n - w; j < n; ++j) {
      const double prev = history.rows[j - 1].gcv;
      const double cur = history.rows[j].gcv;
      if (!(cur > prev)) increasing = false;
      const double rel = std::abs(cur - prev) / std::max(std::abs(prev), 1e-300);
      if (!(rel < rule.gcv_flat_tol)) flat = false;
    }
    if (increasing) return {true, "gcv_min"};
    if (flat) return {true, "gcv_flat"};
  }
  return {false, ""};
}

}  // namespace gkh
