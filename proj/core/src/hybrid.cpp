#include "gkhybrid/hybrid.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gkh {

HybridResult solve(OperatorPtr a, const NoiseModel& r, OperatorPtr q, const Vector& d,
                   const HybridOptions& opts) {
  if (!a || !q) throw std::invalid_argument("solve: null operator");
  const Index n = a->cols();
  if (d.size() != a->rows()) {
    std::ostringstream msg;
    msg << "solve: data vector has length " << d.size() << ", expected " << a->rows();
    throw std::invalid_argument(msg.str());
  }
  const Vector mu = opts.mu.size() == 0 ? Vector::Zero(n) : opts.mu;
  if (mu.size() != n) throw std::invalid_argument("solve: prior mean has wrong length");
  if (opts.record_errors_against && opts.record_errors_against->size() != n) {
    throw std::invalid_argument("solve: truth vector has wrong length");
  }
  opts.param_rule.validate();
  opts.stop_rule.validate();
  if (opts.param_rule.kind == ParamKind::optimal && !opts.record_errors_against) {
    throw std::invalid_argument("solve: the optimal rule needs a truth vector");
  }

  const Vector b = d - a->apply(mu);
  if (b.squaredNorm() == 0.0) throw std::invalid_argument("solve: data equals A mu");

  auto state = std::make_shared<GenGK>(a, r, q, b, GenGKOptions{opts.reorth, 1e-14});

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Vector* truth = opts.record_errors_against ? &*opts.record_errors_against : nullptr;
  const double truth_norm = truth ? std::max(truth->norm(), 1e-300) : 1.0;
  auto relative_error = [&](const Vector& z) {
    return (recover_solution(*state, z, mu) - *truth).norm() / truth_norm;
  };

  SolveRecord record;
  record.beta1 = state->beta(1);
  SelectionContext context;
  if (truth) context.error_of = relative_error;

  Vector z;
  while (true) {
    state->step();
    const ProjectedProblem pp = build_projected(*state, opts.variant);
    const Selection sel = select_lambda(opts.param_rule, pp, context);

    IterationRow row;
    row.k = state->k();
    double lambda = sel.lambda;
    if (sel.dp_status == DpStatus::too_early) {
      lambda = 0.0;
      row.note = "dp_too_early";
    } else if (sel.dp_status == DpStatus::too_late) {
      row.note = "dp_too_late";
    }
    const ProjectedSolution sol = pp.solve(lambda);
    z = sol.z;
    row.lambda = lambda;
    row.residual_norm = sol.residual_norm;
    row.solution_seminorm = sol.solution_seminorm;
    row.gcv = gcv_projected(pp, lambda);
    row.relative_error = truth ? relative_error(z) : nan;
    record.rows.push_back(row);

    if (state->broken_down()) {
      record.stop_reason = "breakdown";
      break;
    }
    const StopDecision decision = should_stop(record, opts.stop_rule);
    if (decision.stop) {
      record.stop_reason = decision.reason;
      break;
    }
  }
  record.rows.back().note = record.stop_reason;
  record.final_z = z;
  record.solution = recover_solution(*state, z, mu);
  return {std::move(record), std::move(state)};
}

ErrorSummary summarize_errors(const SolveRecord& record) {
  if (record.rows.empty()) throw std::invalid_argument("summarize_errors: empty record");
  ErrorSummary s;
  s.min_error = std::numeric_limits<double>::infinity();
  for (const auto& row : record.rows) {
    if (std::isnan(row.relative_error)) {
      throw std::invalid_argument("summarize_errors: record carries no relative errors");
    }
    if (row.relative_error < s.min_error) {
      s.min_error = row.relative_error;
      s.min_error_iteration = row.k;
    }
  }
  s.terminal_error = record.rows.back().relative_error;
  return s;
}

bool exhibits_semiconvergence(const SolveRecord& record, double factor) {
  const ErrorSummary s = summarize_errors(record);
  return s.terminal_error > factor * s.min_error;
}

SemiconvergenceReport semiconvergence_probe(const SolveRecord& lambda0,
                                            const SolveRecord& hybrid) {
  SemiconvergenceReport rep;
  rep.unregularized = summarize_errors(lambda0);
  rep.hybrid = summarize_errors(hybrid);
  rep.unregularized_semiconverges = exhibits_semiconvergence(lambda0);
  rep.hybrid_semiconverges = exhibits_semiconvergence(hybrid);
  return rep;
}

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_history_csv(std::ostream& out, const SolveRecord& record) {
  out << kHistoryCsvVersion << '\n';
  out << "k,lambda,resnorm,znorm,gcv,relerr,reason\n";
  for (const auto& row : record.rows) {
    out << row.k << ',' << fmt_double(row.lambda) << ',' << fmt_double(row.residual_norm) << ','
        << fmt_double(row.solution_seminorm) << ',' << fmt_double(row.gcv) << ','
        << fmt_double(row.relative_error) << ',' << row.note << '\n';
  }
}

}  // namespace gkh
