#pragma once

#include "gkhybrid/linop.hpp"

#include <stdexcept>

namespace gkh {

struct GenGKOptions {
  /// One classical Gram-Schmidt pass against all stored basis vectors.
  bool reorth = true;
  /// Breakdown when a normalization falls below this fraction of the first
  /// normalization of the same sequence (beta_1 for betas, alpha_1 for alphas).
  double breakdown_rel_tol = 1e-14;
};

class GenGKBreakdown : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Generalized Golub-Kahan bidiagonalization in the R^{-1} and Q inner products.
///
/// After k completed steps:
///   U = [u_1 .. u_{k+1}]  with U^T R^{-1} U = I
///   V = [v_1 .. v_{k+1}]  with V^T Q V = I (v_{k+1} absent after an alpha breakdown)
///   A Q V_k = U_{k+1} B_k
///   A^T R^{-1} U_{k+1} = V_k B_k^T + alpha_{k+1} v_{k+1} e_{k+1}^T
/// where B_k is (k+1) x k lower bidiagonal with diagonal alpha_1..alpha_k and
/// subdiagonal beta_2..beta_{k+1}. Q v_i is cached next to every v_i, so a step
/// costs one new product with Q.
class GenGK {
public:
  GenGK(OperatorPtr a, const NoiseModel& r, OperatorPtr q, const Vector& b,
        GenGKOptions options = {});

  void step();

  Index k() const noexcept { return k_; }
  Index m() const noexcept { return a_->rows(); }
  Index n() const noexcept { return a_->cols(); }
  bool reorth() const noexcept { return options_.reorth; }
  bool broken_down() const noexcept { return breakdown_; }
  /// Zero beta_{k+1}: the Krylov space is exhausted and B_k solves exactly.
  bool beta_breakdown() const noexcept { return beta_breakdown_; }

  /// alpha_1 .. alpha_{k+1} (alpha_{k+1} = 0 after an alpha breakdown).
  Vector alphas() const { return alphas_.head(k_ + 1); }
  /// beta_1 .. beta_{k+1}.
  Vector betas() const { return betas_.head(k_ + 1); }
  double alpha(Index i) const { return alphas_[i - 1]; }  // 1-based
  double beta(Index i) const { return betas_[i - 1]; }    // 1-based

  /// First `cols` columns of U, V or Q V.
  Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true> U(Index cols) const { return u_.leftCols(cols); }
  Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true> V(Index cols) const { return v_.leftCols(cols); }
  Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true> QV(Index cols) const { return qv_.leftCols(cols); }
  Index stored_u() const noexcept { return nu_; }
  Index stored_v() const noexcept { return nv_; }

  /// Dense (k+1) x k lower-bidiagonal B_k.
  Matrix bidiagonal() const;
  /// Dense (k+1) x k matrix [B_k^T B_k; beta_{k+1} alpha_{k+1} e_k^T].
  Matrix augmented() const;

  /// max |U^T R^{-1} U - I| over the stored u vectors.
  double orthogonality_u() const;
  /// max |V^T Q V - I| over the stored v vectors (uses cached Q v).
  double orthogonality_v() const;

  long q_products() const noexcept { return q_products_; }
  long a_products() const noexcept { return a_products_; }
  long at_products() const noexcept { return at_products_; }

  const NoiseModel& noise() const noexcept { return r_; }
  const LinearOperator& forward() const noexcept { return *a_; }
  const LinearOperator& prior() const noexcept { return *q_; }

private:
  void reserve(Index cols);
  void push_u(const Vector& u);
  void push_v(const Vector& v, const Vector& qv);

  OperatorPtr a_;
  NoiseModel r_;
  OperatorPtr q_;
  GenGKOptions options_;

  Matrix u_;
  Matrix v_;
  Matrix qv_;
  Index nu_ = 0;
  Index nv_ = 0;
  Vector alphas_;
  Vector betas_;
  Index k_ = 0;
  bool breakdown_ = false;
  bool beta_breakdown_ = false;
  double alpha_tol_ = 0.0;
  double beta_tol_ = 0.0;
  long q_products_ = 0;
  long a_products_ = 0;
  long at_products_ = 0;
};

/// Dense B_k from alpha_1..alpha_k and beta_2..beta_{k+1}.
Matrix make_bidiagonal(const Vector& alphas, const Vector& betas, Index k);

}  // namespace gkh
