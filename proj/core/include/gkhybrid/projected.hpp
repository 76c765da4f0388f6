#pragma once

#include "gkhybrid/gengk.hpp"

#include <string>

namespace gkh {

enum class Variant { lsqr, lsmr };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct ProjectedSolution {
  Vector z;
  double residual_norm = 0.0;
  double solution_seminorm = 0.0;
  double lambda = 0.0;
};

/// The small Tikhonov problem min ||M z - rhs_scale e_1||^2 + lambda^2 ||z||^2,
/// with M = B_k (lsqr) or the augmented B̄_k (lsmr) and rhs_scale = beta_1 or
/// alpha_1 beta_1. The SVD of M is computed once and shared by every lambda.
class ProjectedProblem {
public:
  ProjectedProblem(Variant variant, Matrix m, double rhs_scale);

  Variant variant() const noexcept { return variant_; }
  Index k() const noexcept { return m_.cols(); }
  const Matrix& matrix() const noexcept { return m_; }
  double rhs_scale() const noexcept { return rhs_scale_; }

  /// Singular values s_1 >= ... >= s_k.
  const Vector& singular_values() const noexcept { return s_; }
  const Matrix& left_vectors() const noexcept { return left_; }    // (k+1) x (k+1)
  const Matrix& right_vectors() const noexcept { return right_; }  // k x k
  /// Coefficients of rhs in the left singular basis (length k+1).
  const Vector& rhs_coefficients() const noexcept { return c_; }

  /// Tikhonov filter s_i^2/(s_i^2 + lambda^2), zero on null directions.
  Vector filter(double lambda) const;
  ProjectedSolution solve(double lambda) const;
  /// ||M z_lambda - rhs||^2 from filtered coefficients.
  double residual_squared(double lambda) const;
  /// sum of filter factors = trace(M M^dagger_lambda).
  double filter_trace(double lambda) const;

private:
  Variant variant_;
  Matrix m_;
  double rhs_scale_;
  Vector s_;
  Matrix left_;
  Matrix right_;
  Vector c_;
  double null_tol_ = 0.0;
};

ProjectedProblem build_projected(const GenGK& state, Variant variant);

/// mu + (Q V_k) z using the cached Q v_i.
Vector recover_solution(const GenGK& state, const Vector& z, const Vector& mu);

}  // namespace gkh
