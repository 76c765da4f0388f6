#include "gkhybrid/gengk.hpp"

#include <cmath>
#include <sstream>

namespace gkh {

GenGK::GenGK(OperatorPtr a, const NoiseModel& r, OperatorPtr q, const Vector& b,
             GenGKOptions options)
    : a_(std::move(a)), r_(r), q_(std::move(q)), options_(options) {
  if (!a_ || !q_) throw std::invalid_argument("GenGK: null operator");
  if (q_->rows() != a_->cols() || q_->cols() != a_->cols()) {
    std::ostringstream msg;
    msg << "GenGK: prior covariance is " << q_->rows() << "x" << q_->cols()
        << ", expected " << a_->cols() << "x" << a_->cols();
    throw std::invalid_argument(msg.str());
  }
  if (r_.size() != a_->rows()) {
    throw std::invalid_argument("GenGK: noise model length does not match operator rows");
  }
  if (b.size() != a_->rows()) {
    std::ostringstream msg;
    msg << "GenGK: data vector has length " << b.size() << ", expected " << a_->rows();
    throw std::invalid_argument(msg.str());
  }

  reserve(32);
  alphas_ = Vector::Zero(32);
  betas_ = Vector::Zero(32);

  const double beta1 = r_.weighted_norm(b);
  if (!(beta1 > 0.0)) throw std::invalid_argument("GenGK: zero data vector");
  push_u(b / beta1);
  betas_[0] = beta1;

  Vector w = a_->apply_transpose(r_.apply_inverse(u_.col(0)));
  ++at_products_;
  if (w.norm() == 0.0) throw GenGKBreakdown("GenGK: data orthogonal to range");
  Vector qw = q_->apply(w);
  ++q_products_;
  const double alpha1 = std::sqrt(std::max(0.0, w.dot(qw)));
  if (!(alpha1 > 0.0)) throw GenGKBreakdown("GenGK: data orthogonal to range");
  alphas_[0] = alpha1;
  push_v(w / alpha1, qw / alpha1);

  alpha_tol_ = options_.breakdown_rel_tol * alpha1;
  beta_tol_ = options_.breakdown_rel_tol * beta1;
}

void GenGK::reserve(Index cols) {
  if (u_.cols() >= cols) return;
  const Index cap = std::max<Index>(cols, 2 * u_.cols());
  u_.conservativeResize(a_->rows(), cap);
  v_.conservativeResize(a_->cols(), cap);
  qv_.conservativeResize(a_->cols(), cap);
  if (alphas_.size() < cap) {
    const Index old = alphas_.size();
    alphas_.conservativeResize(cap);
    betas_.conservativeResize(cap);
    alphas_.tail(cap - old).setZero();
    betas_.tail(cap - old).setZero();
  }
}

void GenGK::push_u(const Vector& u) {
  reserve(nu_ + 1);
  u_.col(nu_++) = u;
}

void GenGK::push_v(const Vector& v, const Vector& qv) {
  reserve(nv_ + 1);
  v_.col(nv_) = v;
  qv_.col(nv_) = qv;
  ++nv_;
}

void GenGK::step() {
  if (breakdown_) throw GenGKBreakdown("GenGK: step requested after breakdown");
  reserve(k_ + 2);
  const Index i = k_;  // 0-based index of the newest v and u

  Vector u = a_->apply(qv_.col(i)) - alphas_[i] * u_.col(i);
  ++a_products_;
  if (options_.reorth) {
    const Vector ru = r_.apply_inverse(u);
    const Vector c = u_.leftCols(nu_).transpose() * ru;
    u.noalias() -= u_.leftCols(nu_) * c;
  }
  const double beta = r_.weighted_norm(u);
  ++k_;
  if (beta <= beta_tol_) {
    betas_[k_] = 0.0;
    alphas_[k_] = 0.0;
    breakdown_ = true;
    beta_breakdown_ = true;
    return;
  }
  betas_[k_] = beta;
  u /= beta;
  push_u(u);

  Vector w = a_->apply_transpose(r_.apply_inverse(u)) - beta * v_.col(i);
  ++at_products_;
  if (options_.reorth) {
    const Vector c = qv_.leftCols(nv_).transpose() * w;
    w.noalias() -= v_.leftCols(nv_) * c;
  }
  Vector qw = q_->apply(w);
  ++q_products_;
  const double alpha = std::sqrt(std::max(0.0, w.dot(qw)));
  if (alpha <= alpha_tol_) {
    alphas_[k_] = 0.0;
    breakdown_ = true;
    return;
  }
  alphas_[k_] = alpha;
  push_v(w / alpha, qw / alpha);
}

Matrix make_bidiagonal(const Vector& alphas, const Vector& betas, Index k) {
  Matrix b = Matrix::Zero(k + 1, k);
  for (Index j = 0; j < k; ++j) {
    b(j, j) = alphas[j];
    b(j + 1, j) = betas[j + 1];
  }
  return b;
}

Matrix GenGK::bidiagonal() const { return make_bidiagonal(alphas_, betas_, k_); }

Matrix GenGK::augmented() const {
  if (k_ < 1) throw std::logic_error("GenGK::augmented requires k >= 1");
  const Matrix b = bidiagonal();
  Matrix out = Matrix::Zero(k_ + 1, k_);
  out.topRows(k_) = b.transpose() * b;
  out(k_, k_ - 1) = betas_[k_] * alphas_[k_];
  return out;
}

double GenGK::orthogonality_u() const {
  const auto u = u_.leftCols(nu_);
  Matrix ru(u.rows(), u.cols());
  for (Index j = 0; j < u.cols(); ++j) ru.col(j) = r_.apply_inverse(u.col(j));
  const Matrix g = u.transpose() * ru - Matrix::Identity(nu_, nu_);
  return g.cwiseAbs().maxCoeff();
}

double GenGK::orthogonality_v() const {
  const Matrix g =
      v_.leftCols(nv_).transpose() * qv_.leftCols(nv_) - Matrix::Identity(nv_, nv_);
  return g.cwiseAbs().maxCoeff();
}

}  // namespace gkh
