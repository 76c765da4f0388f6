#include "gkhybrid/projected.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gkh {

std::string to_string(Variant v) { return v == Variant::lsqr ? "lsqr" : "lsmr"; }

Variant parse_variant(const std::string& s) {
  if (s == "lsqr") return Variant::lsqr;
  if (s == "lsmr") return Variant::lsmr;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

ProjectedProblem::ProjectedProblem(Variant variant, Matrix m, double rhs_scale)
    : variant_(variant), m_(std::move(m)), rhs_scale_(rhs_scale) {
  if (m_.cols() < 1 || m_.rows() != m_.cols() + 1) {
    throw std::invalid_argument("ProjectedProblem: matrix must be (k+1) x k with k >= 1");
  }
  const Index k = m_.cols();
  Eigen::BDCSVD<Matrix> svd(m_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  s_ = svd.singularValues();
  left_ = svd.matrixU();
  right_ = svd.matrixV();
  c_ = rhs_scale_ * left_.row(0).transpose();
  // Directions with s_i at round-off level are treated as null at lambda = 0.
  null_tol_ = s_.size() > 0 ? s_[0] * static_cast<double>(k + 1) *
                                  std::numeric_limits<double>::epsilon()
                            : 0.0;
}

Vector ProjectedProblem::filter(double lambda) const {
  if (lambda < 0.0) throw std::invalid_argument("ProjectedProblem: lambda must be >= 0");
  const double l2 = lambda * lambda;
  Vector f(s_.size());
  for (Index i = 0; i < s_.size(); ++i) {
    const double s2 = s_[i] * s_[i];
    if (lambda == 0.0) {
      f[i] = s_[i] > null_tol_ ? 1.0 : 0.0;
    } else {
      f[i] = s2 / (s2 + l2);
    }
  }
  return f;
}

ProjectedSolution ProjectedProblem::solve(double lambda) const {
  if (lambda < 0.0) throw std::invalid_argument("ProjectedProblem: lambda must be >= 0");
  const Index k = s_.size();
  const double l2 = lambda * lambda;
  Vector coef(k);
  for (Index i = 0; i < k; ++i) {
    const double s = s_[i];
    if (lambda == 0.0) {
      coef[i] = s > null_tol_ ? c_[i] / s : 0.0;
    } else {
      coef[i] = s * c_[i] / (s * s + l2);
    }
  }
  ProjectedSolution out;
  out.lambda = lambda;
  out.z = right_ * coef;
  out.solution_seminorm = coef.norm();
  out.residual_norm = std::sqrt(residual_squared(lambda));
  return out;
}

double ProjectedProblem::residual_squared(double lambda) const {
  const Vector f = filter(lambda);
  double r2 = c_[s_.size()] * c_[s_.size()];
  for (Index i = 0; i < s_.size(); ++i) {
    const double t = (1.0 - f[i]) * c_[i];
    r2 += t * t;
  }
  return r2;
}

double ProjectedProblem::filter_trace(double lambda) const { return filter(lambda).sum(); }

ProjectedProblem build_projected(const GenGK& state, Variant variant) {
  if (state.k() < 1) throw std::invalid_argument("build_projected: requires k >= 1");
  if (variant == Variant::lsqr) {
    return ProjectedProblem(Variant::lsqr, state.bidiagonal(), state.beta(1));
  }
  return ProjectedProblem(Variant::lsmr, state.augmented(), state.beta(1) * state.alpha(1));
}

Vector recover_solution(const GenGK& state, const Vector& z, const Vector& mu) {
  if (z.size() != state.k()) {
    throw std::invalid_argument("recover_solution: coefficient vector must have length k");
  }
  if (mu.size() != state.n()) {
    throw std::invalid_argument("recover_solution: prior mean has wrong length");
  }
  return mu + state.QV(state.k()) * z;
}

}  // namespace gkh
