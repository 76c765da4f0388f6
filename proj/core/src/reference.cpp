#include "gkhybrid/reference.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gkh::reference {

namespace {

constexpr double kSigmaCut = 1e-14;

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    std::ostringstream msg;
    msg << what << " must be square, got " << m.rows() << "x" << m.cols();
    throw std::invalid_argument(msg.str());
  }
}

void require_limit(Index n, Index limit, const char* op) {
  if (n > limit) {
    std::ostringstream msg;
    msg << op << ": " << n << " unknowns exceeds the dense limit of " << limit;
    throw std::invalid_argument(msg.str());
  }
}

void require_shapes(const Matrix& a, const Matrix& r, const Matrix& q, const Vector& b,
                    const char* op) {
  require_square(r, "R");
  require_square(q, "Q");
  if (r.rows() != a.rows() || q.rows() != a.cols() || b.size() != a.rows()) {
    std::ostringstream msg;
    msg << op << ": inconsistent shapes (A " << a.rows() << "x" << a.cols() << ", R "
        << r.rows() << ", Q " << q.rows() << ", b " << b.size() << ")";
    throw std::invalid_argument(msg.str());
  }
  require_limit(a.cols(), kDenseLimit, op);
}

// argmin ||T z - beta e_1||^2 + lambda^2 ||z||^2 for a (j+1) x j matrix T.
Vector damped_small_solve(const Matrix& t, double beta, double lambda) {
  const Index j = t.cols();
  Matrix stacked = Matrix::Zero(t.rows() + j, j);
  stacked.topRows(t.rows()) = t;
  if (lambda != 0.0) stacked.bottomRows(j) = lambda * Matrix::Identity(j, j);
  Vector rhs = Vector::Zero(stacked.rows());
  rhs(0) = beta;
  return stacked.colPivHouseholderQr().solve(rhs);
}

Matrix inverse_spd(const Matrix& m, const char* what) {
  Eigen::LDLT<Matrix> f(m);
  if (f.info() != Eigen::Success || !f.isPositive()) {
    throw std::invalid_argument(std::string(what) + " is not positive definite");
  }
  return f.solve(Matrix::Identity(m.rows(), m.cols()));
}

}  // namespace

SymmetricFactor symmetric_factor(const Matrix& spd, const char* what) {
  require_square(spd, what);
  const double asym = (spd - spd.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(spd.cwiseAbs().maxCoeff(), 1e-300);
  if (asym > 1e-10 * scale) throw std::invalid_argument(std::string(what) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (spd + spd.transpose()));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error(std::string(what) + ": eigendecomposition failed");
  }
  const Vector& w = es.eigenvalues();
  if (!(w.minCoeff() > 0.0)) {
    std::ostringstream msg;
    msg << what << " is not positive definite (smallest eigenvalue " << w.minCoeff() << ")";
    throw std::invalid_argument(msg.str());
  }
  const Matrix& v = es.eigenvectors();
  SymmetricFactor f;
  f.inv_sqrt = v * w.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  f.sqrt = v * w.cwiseSqrt().asDiagonal() * v.transpose();
  return f;
}

Matrix dense(const NoiseModel& r) { return r.diag().asDiagonal(); }

GsvdFactors gsvd(const Matrix& a, const Matrix& q, const Matrix& r, Index dense_limit) {
  require_square(q, "Q");
  require_square(r, "R");
  const Index m = a.rows();
  const Index n = a.cols();
  if (q.rows() != n || r.rows() != m) throw std::invalid_argument("gsvd: inconsistent shapes");
  if (m < n) throw std::invalid_argument("gsvd: requires at least as many rows as columns");
  require_limit(n, dense_limit, "gsvd");

  const SymmetricFactor fq = symmetric_factor(q, "Q");
  const SymmetricFactor fr = symmetric_factor(r, "R");

  GsvdFactors f;
  f.L_Q = fq.inv_sqrt;
  f.L_Q_inv = fq.sqrt;
  f.L_R = fr.inv_sqrt;
  f.R_inv = f.L_R * f.L_R;

  const Matrix a_hat = f.L_R * a * f.L_Q_inv;
  Eigen::BDCSVD<Matrix> svd(a_hat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  f.sigma_hat = svd.singularValues();
  f.U_R = fr.sqrt * svd.matrixU();
  f.V_Q = f.L_Q_inv * svd.matrixV();
  f.V_Q_inv = svd.matrixV().transpose() * f.L_Q;
  return f;
}

Vector gsvd_coefficients(const GsvdFactors& f, const Vector& b) {
  if (b.size() != f.m()) throw std::invalid_argument("gsvd_coefficients: wrong data length");
  return f.U_R.transpose() * (f.R_inv * b);
}

FilterSpec FilterSpec::tikhonov(double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("FilterSpec: lambda must be >= 0");
  FilterSpec s;
  s.kind = FilterKind::tikhonov;
  s.lambda = lambda;
  return s;
}

FilterSpec FilterSpec::truncated(Index k) {
  if (k < 1) throw std::invalid_argument("FilterSpec: cutoff must be >= 1");
  FilterSpec s;
  s.kind = FilterKind::truncated;
  s.cutoff = k;
  return s;
}

Vector filter_factors(const GsvdFactors& f, const FilterSpec& spec) {
  const Index n = f.sigma_hat.size();
  Vector phi(n);
  if (spec.kind == FilterKind::truncated) {
    if (spec.cutoff < 1 || spec.cutoff > n) throw std::invalid_argument("FilterSpec: cutoff out of range");
    for (Index j = 0; j < n; ++j) phi(j) = j < spec.cutoff ? 1.0 : 0.0;
    return phi;
  }
  if (!(spec.lambda >= 0.0)) throw std::invalid_argument("FilterSpec: lambda must be >= 0");
  const double l2 = spec.lambda * spec.lambda;
  for (Index j = 0; j < n; ++j) {
    const double s2 = f.sigma_hat(j) * f.sigma_hat(j);
    phi(j) = (s2 + l2) > 0.0 ? s2 / (s2 + l2) : 0.0;
  }
  return phi;
}

namespace {

Vector sigma_pinv(const Vector& sigma) {
  const double cut = sigma.size() ? kSigmaCut * sigma(0) : 0.0;
  Vector out(sigma.size());
  for (Index j = 0; j < sigma.size(); ++j) out(j) = sigma(j) > cut ? 1.0 / sigma(j) : 0.0;
  return out;
}

}  // namespace

Vector filtered_solution(const GsvdFactors& f, const FilterSpec& spec, const Vector& b,
                         const Vector& mu) {
  if (mu.size() != f.n()) throw std::invalid_argument("filtered_solution: wrong prior mean length");
  const Vector g = gsvd_coefficients(f, b);
  const Index n = f.n();
  const Vector coef =
      filter_factors(f, spec).cwiseProduct(sigma_pinv(f.sigma_hat)).cwiseProduct(g.head(n));
  return mu + f.V_Q * coef;
}

PicardTable picard_data(const GsvdFactors& f, const Vector& b) {
  const Vector g = gsvd_coefficients(f, b);
  const Index n = f.n();
  PicardTable t;
  t.sigma = f.sigma_hat;
  t.coefficient = g.head(n).cwiseAbs();
  t.ratio = t.coefficient.cwiseQuotient(t.sigma);
  return t;
}

PicardTable picard_data_svd(const Matrix& a, const Vector& b) {
  if (b.size() != a.rows()) throw std::invalid_argument("picard_data_svd: wrong data length");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
  PicardTable t;
  t.sigma = svd.singularValues();
  t.coefficient = (svd.matrixU().transpose() * b).cwiseAbs();
  t.ratio = t.coefficient.cwiseQuotient(t.sigma);
  return t;
}

namespace {

struct FullTerms {
  double residual2 = 0.0;
  double trace = 0.0;  // sum of filter factors
};

FullTerms full_terms(const GsvdFactors& f, const Vector& b, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("full criterion: lambda must be >= 0");
  const Vector g = gsvd_coefficients(f, b);
  const Vector phi = filter_factors(f, FilterSpec::tikhonov(lambda));
  const Vector keep = sigma_pinv(f.sigma_hat);
  FullTerms t;
  for (Index i = 0; i < f.n(); ++i) {
    const double p = lambda == 0.0 ? (keep(i) > 0.0 ? 1.0 : 0.0) : phi(i);
    t.residual2 += std::pow((1.0 - p) * g(i), 2);
    t.trace += p;
  }
  t.residual2 += g.tail(f.m() - f.n()).squaredNorm();
  return t;
}

}  // namespace

double full_gcv(const GsvdFactors& f, const Vector& b, double lambda) {
  const FullTerms t = full_terms(f, b, lambda);
  const double denom = static_cast<double>(f.m()) - t.trace;
  return static_cast<double>(f.n()) * t.residual2 / (denom * denom);
}

double full_upre(const GsvdFactors& f, const Vector& b, double lambda, double eta2) {
  const FullTerms t = full_terms(f, b, lambda);
  const double n = static_cast<double>(f.n());
  return t.residual2 / n + 2.0 * eta2 / n * t.trace - eta2;
}

Vector map_estimate(const Matrix& a, const Matrix& q, const Matrix& r, const Vector& d,
                    const Vector& mu, double lambda) {
  require_shapes(a, r, q, d, "map_estimate");
  if (mu.size() != a.cols()) throw std::invalid_argument("map_estimate: wrong prior mean length");
  const Matrix r_inv = inverse_spd(r, "R");
  const Matrix q_inv = inverse_spd(q, "Q");
  const double l2 = lambda * lambda;
  const Matrix h = a.transpose() * r_inv * a + l2 * q_inv;
  const Vector rhs = a.transpose() * (r_inv * d) + l2 * (q_inv * mu);
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  return h.colPivHouseholderQr().solve(rhs);
}

namespace {

// Q-orthogonal Lanczos on M = A^T R^{-1} A Q from c = A^T R^{-1} b with two
// Gram-Schmidt passes per step. h is the (j+1) x j projection of M
// (tridiagonal up to rounding); stops early on an invariant subspace.
struct QLanczos {
  Matrix v;
  Matrix h;
  double beta1 = 0.0;
  Index steps = 0;
  bool exhausted = false;
};

QLanczos q_lanczos(const Matrix& a, const Matrix& r, const Matrix& q, const Vector& b, Index k) {
  const Index n = a.cols();
  const Matrix atr = a.transpose() * inverse_spd(r, "R");
  const Vector c = atr * b;
  QLanczos out;
  out.beta1 = std::sqrt(std::max(c.dot(q * c), 0.0));
  if (!(out.beta1 > 0.0)) return out;

  const Index kmax = std::min(k, n);
  out.v.resize(n, kmax + 1);
  out.h = Matrix::Zero(kmax + 1, kmax);
  Matrix qv(n, kmax + 1);
  out.v.col(0) = c / out.beta1;
  qv.col(0) = q * out.v.col(0);
  for (Index j = 0; j < kmax; ++j) {
    Vector w = atr * (a * qv.col(j));
    for (int pass = 0; pass < 2; ++pass) {
      const Vector proj = qv.leftCols(j + 1).transpose() * w;
      w -= out.v.leftCols(j + 1) * proj;
      out.h.col(j).head(j + 1) += proj;
    }
    const double beta = std::sqrt(std::max(w.dot(q * w), 0.0));
    out.h(j + 1, j) = beta;
    out.steps = j + 1;
    if (beta <= 1e-14 * out.beta1) {
      out.exhausted = true;
      break;
    }
    out.v.col(j + 1) = w / beta;
    qv.col(j + 1) = q * out.v.col(j + 1);
  }
  return out;
}

}  // namespace

std::vector<Vector> cg_q_inner(const Matrix& a, const Matrix& r, const Matrix& q,
                               const Vector& b, double lambda, Index k) {
  require_shapes(a, r, q, b, "cg_q_inner");
  const QLanczos lz = q_lanczos(a, r, q, b, k);
  std::vector<Vector> iterates;
  const double l2 = lambda * lambda;
  for (Index j = 1; j <= lz.steps; ++j) {
    Matrix t = lz.h.topLeftCorner(j, j);
    t.diagonal().array() += l2;
    Vector rhs = Vector::Zero(j);
    rhs(0) = lz.beta1;
    Eigen::LDLT<Matrix> f(0.5 * (t + t.transpose()));
    if (f.info() != Eigen::Success || !f.isPositive()) {
      throw std::runtime_error("cg_q_inner: indefinite projected operator");
    }
    iterates.push_back(lz.v.leftCols(j) * f.solve(rhs));
  }
  return iterates;
}

std::vector<Vector> minres_q_inner(const Matrix& a, const Matrix& r, const Matrix& q,
                                   const Vector& b, double lambda, Index k) {
  require_shapes(a, r, q, b, "minres_q_inner");
  const QLanczos lz = q_lanczos(a, r, q, b, k);
  std::vector<Vector> iterates;
  for (Index j = 1; j <= lz.steps; ++j) {
    const Vector z = damped_small_solve(lz.h.topLeftCorner(j + 1, j), lz.beta1, lambda);
    iterates.push_back(lz.v.leftCols(j) * z);
  }
  return iterates;
}

std::vector<Vector> priorconditioned_lsqr(const Matrix& a, const Matrix& r, const Matrix& q,
                                          const Vector& b, double lambda, Index k,
                                          const Vector& mu, bool reorth) {
  require_shapes(a, r, q, b, "priorconditioned_lsqr");
  if (mu.size() != a.cols()) throw std::invalid_argument("priorconditioned_lsqr: wrong prior mean length");
  const SymmetricFactor fq = symmetric_factor(q, "Q");
  const SymmetricFactor fr = symmetric_factor(r, "R");
  const Matrix a_hat = fr.inv_sqrt * a * fq.sqrt;
  const Vector b_hat = fr.inv_sqrt * b;
  const Index m = a.rows();
  const Index n = a.cols();

  std::vector<Vector> iterates;
  const double beta1 = b_hat.norm();
  if (!(beta1 > 0.0)) return iterates;

  const Index kmax = std::min(k, n);
  Matrix u(m, kmax + 1);
  Matrix v(n, kmax);
  Matrix bidiag = Matrix::Zero(kmax + 1, kmax);
  u.col(0) = b_hat / beta1;
  for (Index j = 0; j < kmax; ++j) {
    Vector w = a_hat.transpose() * u.col(j);
    if (j > 0) w -= bidiag(j, j - 1) * v.col(j - 1);
    if (reorth && j > 0) w -= v.leftCols(j) * (v.leftCols(j).transpose() * w);
    const double alpha = w.norm();
    if (alpha <= 1e-14 * beta1) break;
    v.col(j) = w / alpha;
    bidiag(j, j) = alpha;

    Vector p = a_hat * v.col(j) - alpha * u.col(j);
    if (reorth) p -= u.leftCols(j + 1) * (u.leftCols(j + 1).transpose() * p);
    const double beta = p.norm();
    bidiag(j + 1, j) = beta;

    const Vector y = damped_small_solve(bidiag.topLeftCorner(j + 2, j + 1), beta1, lambda);
    iterates.push_back(mu + fq.sqrt * (v.leftCols(j + 1) * y));
    if (beta <= 1e-14 * beta1) break;
    u.col(j + 1) = p / beta;
  }
  return iterates;
}

RecoveredFilter genlsqr_filter_factors(const GsvdFactors& f, const Vector& s_k,
                                       const Vector& mu, const Vector& b) {
  if (s_k.size() != f.n() || mu.size() != f.n()) {
    throw std::invalid_argument("genlsqr_filter_factors: wrong iterate length");
  }
  const Vector g = gsvd_coefficients(f, b);
  const Vector y = f.V_Q_inv * (s_k - mu);
  const Index n = f.n();
  const double gnorm = g.norm();
  const double cut = n ? kSigmaCut * f.sigma_hat(0) : 0.0;
  RecoveredFilter out;
  out.phi = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  out.defined.assign(static_cast<std::size_t>(n), false);
  for (Index j = 0; j < n; ++j) {
    if (std::abs(g(j)) > kSigmaCut * gnorm && f.sigma_hat(j) > cut) {
      out.phi(j) = y(j) * f.sigma_hat(j) / g(j);
      out.defined[static_cast<std::size_t>(j)] = true;
    }
  }
  return out;
}

Vector resynthesize(const GsvdFactors& f, const RecoveredFilter& phi, const Vector& b,
                    const Vector& mu) {
  const Vector g = gsvd_coefficients(f, b);
  const Index n = f.n();
  Vector coef = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    if (phi.defined[static_cast<std::size_t>(j)]) coef(j) = phi.phi(j) * g(j) / f.sigma_hat(j);
  }
  return mu + f.V_Q * coef;
}

}  // namespace gkh::reference
