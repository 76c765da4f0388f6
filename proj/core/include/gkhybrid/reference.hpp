#pragma once

#include "gkhybrid/linop.hpp"

#include <vector>

// Dense desk-scale oracles. Everything here forms matrices explicitly and is
// meant for n up to a few hundred.
namespace gkh::reference {

inline constexpr Index kDenseLimit = 512;

/// Symmetric factor of an SPD matrix M from its eigendecomposition:
/// inv_sqrt = M^{-1/2} (so inv_sqrt^T inv_sqrt = M^{-1}) and sqrt = M^{1/2}.
struct SymmetricFactor {
  Matrix inv_sqrt;
  Matrix sqrt;
};

SymmetricFactor symmetric_factor(const Matrix& spd, const char* what = "matrix");

/// Diagonal of a NoiseModel as a dense matrix.
Matrix dense(const NoiseModel& r);

/// Van Loan form: U_R^{-1} A V_Q = diag(sigma_hat) with U_R^T R^{-1} U_R = I_m
/// and V_Q^T Q^{-1} V_Q = I_n.
struct GsvdFactors {
  Matrix U_R;      // m x m
  Matrix V_Q;      // n x n
  Matrix V_Q_inv;  // n x n
  Vector sigma_hat;
  Matrix R_inv;    // m x m
  Matrix L_R;      // R^{-1/2}
  Matrix L_Q;      // Q^{-1/2}
  Matrix L_Q_inv;  // Q^{1/2}

  Index m() const { return U_R.rows(); }
  Index n() const { return V_Q.rows(); }
};

/// Requires m >= n, Q and R symmetric positive definite, n <= dense_limit.
GsvdFactors gsvd(const Matrix& a, const Matrix& q, const Matrix& r,
                 Index dense_limit = kDenseLimit);

/// g = U_R^T R^{-1} b (length m).
Vector gsvd_coefficients(const GsvdFactors& f, const Vector& b);

enum class FilterKind { tikhonov, truncated };

struct FilterSpec {
  FilterKind kind = FilterKind::tikhonov;
  double lambda = 0.0;
  Index cutoff = 0;

  static FilterSpec tikhonov(double lambda);
  static FilterSpec truncated(Index k);
};

Vector filter_factors(const GsvdFactors& f, const FilterSpec& spec);

/// mu + V_Q Phi Sigma^dagger g with b = d - A mu; reciprocals of sigma_hat
/// below 1e-14 sigma_hat_1 are zeroed.
Vector filtered_solution(const GsvdFactors& f, const FilterSpec& spec, const Vector& b,
                         const Vector& mu);

struct PicardTable {
  Vector sigma;
  Vector coefficient;  // |g_j|
  Vector ratio;        // |g_j| / sigma_j
};

PicardTable picard_data(const GsvdFactors& f, const Vector& b);
/// Same table for the ordinary SVD of A (R = I, Q = I).
PicardTable picard_data_svd(const Matrix& a, const Vector& b);

/// GCV of the full problem evaluated through the GSVD.
double full_gcv(const GsvdFactors& f, const Vector& b, double lambda);
/// UPRE of the full problem evaluated through the GSVD.
double full_upre(const GsvdFactors& f, const Vector& b, double lambda, double eta2);

/// Direct MAP estimate from the normal equations
/// (A^T R^{-1} A + lambda^2 Q^{-1}) s = A^T R^{-1} d + lambda^2 Q^{-1} mu.
Vector map_estimate(const Matrix& a, const Matrix& q, const Matrix& r, const Vector& d,
                    const Vector& mu, double lambda);

/// Iterates x_1..x_k of CG in the Q inner product on
/// (A^T R^{-1} A Q + lambda^2 I) x = A^T R^{-1} b, started from x_0 = 0, in
/// Lanczos form x_j = V_j (T_j + lambda^2 I)^{-1} ||c||_Q e_1 with the same
/// reorthogonalized Q-Lanczos basis as minres_q_inner.
std::vector<Vector> cg_q_inner(const Matrix& a, const Matrix& r, const Matrix& q,
                               const Vector& b, double lambda, Index k);

/// Iterates x_1..x_k of MINRES in the Q inner product: Q-orthogonal Lanczos on
/// M = A^T R^{-1} A Q started at c = A^T R^{-1} b (full reorthogonalization),
/// then x_j = V_j argmin ||Tbar_j z - ||c||_Q e_1||^2 + lambda^2 ||z||^2.
std::vector<Vector> minres_q_inner(const Matrix& a, const Matrix& r, const Matrix& q,
                                   const Vector& b, double lambda, Index k);

/// mu + L_Q^{-1} w_j for the LSQR iterates w_j of
/// min ||[L_R A L_Q^{-1}; lambda I] w - [L_R b; 0]||.
std::vector<Vector> priorconditioned_lsqr(const Matrix& a, const Matrix& r, const Matrix& q,
                                          const Vector& b, double lambda, Index k,
                                          const Vector& mu, bool reorth = true);

struct RecoveredFilter {
  Vector phi;                 // NaN where undefined
  std::vector<bool> defined;
};

/// Per-mode filter factors of an iterate s_k in the GSVD basis.
RecoveredFilter genlsqr_filter_factors(const GsvdFactors& f, const Vector& s_k,
                                       const Vector& mu, const Vector& b);

/// mu + V_Q Phi Sigma^dagger g over the defined modes.
Vector resynthesize(const GsvdFactors& f, const RecoveredFilter& phi, const Vector& b,
                    const Vector& mu);

}  // namespace gkh::reference
