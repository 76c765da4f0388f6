#include "gkhybrid/linop.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gkh {

namespace {

void require_length(const char* what, Index expected, Index actual) {
  if (expected != actual) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch, expected length " << expected
        << ", got " << actual;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

LinearOperator::LinearOperator(Index nrows, Index ncols) : nrows_(nrows), ncols_(ncols) {
  if (nrows <= 0 || ncols <= 0) {
    throw std::invalid_argument("LinearOperator: dimensions must be positive");
  }
}

Vector LinearOperator::apply(const ConstVectorRef& x) const {
  require_length("apply", ncols_, x.size());
  Vector y(nrows_);
  apply_into(x, y);
  return y;
}

Vector LinearOperator::apply_transpose(const ConstVectorRef& y) const {
  require_length("apply_transpose", nrows_, y.size());
  Vector x(ncols_);
  apply_transpose_into(y, x);
  return x;
}

IdentityOperator::IdentityOperator(Index n) : LinearOperator(n, n) {}
void IdentityOperator::apply_into(const ConstVectorRef& x, VectorRef y) const { y = x; }
void IdentityOperator::apply_transpose_into(const ConstVectorRef& y, VectorRef x) const { x = y; }

ZeroOperator::ZeroOperator(Index nrows, Index ncols) : LinearOperator(nrows, ncols) {}
void ZeroOperator::apply_into(const ConstVectorRef&, VectorRef y) const { y.setZero(); }
void ZeroOperator::apply_transpose_into(const ConstVectorRef&, VectorRef x) const { x.setZero(); }

DenseOperator::DenseOperator(Matrix a)
    : LinearOperator(a.rows(), a.cols()), a_(std::move(a)) {}
void DenseOperator::apply_into(const ConstVectorRef& x, VectorRef y) const { y.noalias() = a_ * x; }
void DenseOperator::apply_transpose_into(const ConstVectorRef& y, VectorRef x) const {
  x.noalias() = a_.transpose() * y;
}

SparseOperator::SparseOperator(SparseMatrix a)
    : LinearOperator(a.rows(), a.cols()), a_(std::move(a)) {
  a_.makeCompressed();
}
void SparseOperator::apply_into(const ConstVectorRef& x, VectorRef y) const { y.noalias() = a_ * x; }
void SparseOperator::apply_transpose_into(const ConstVectorRef& y, VectorRef x) const {
  x.noalias() = a_.transpose() * y;
}

DiagonalOperator::DiagonalOperator(Vector diag)
    : LinearOperator(diag.size(), diag.size()), d_(std::move(diag)) {}
void DiagonalOperator::apply_into(const ConstVectorRef& x, VectorRef y) const {
  y = d_.cwiseProduct(x);
}
void DiagonalOperator::apply_transpose_into(const ConstVectorRef& y, VectorRef x) const {
  x = d_.cwiseProduct(y);
}

FunctionOperator::FunctionOperator(Index nrows, Index ncols, Fn forward, Fn transpose,
                                   std::string label)
    : LinearOperator(nrows, ncols),
      forward_(std::move(forward)),
      transpose_(std::move(transpose)),
      label_(std::move(label)) {
  if (!forward_ || !transpose_) {
    throw std::invalid_argument("FunctionOperator: both callables are required");
  }
}
void FunctionOperator::apply_into(const ConstVectorRef& x, VectorRef y) const { forward_(x, y); }
void FunctionOperator::apply_transpose_into(const ConstVectorRef& y, VectorRef x) const {
  transpose_(y, x);
}

namespace {

Index composed_rows(const std::vector<OperatorPtr>& f) {
  if (f.empty()) throw std::invalid_argument("ComposedOperator: no factors");
  return f.front()->rows();
}
Index composed_cols(const std::vector<OperatorPtr>& f) {
  if (f.empty()) throw std::invalid_argument("ComposedOperator: no factors");
  return f.back()->cols();
}
Index stacked_rows(const std::vector<OperatorPtr>& b) {
  if (b.empty()) throw std::invalid_argument("StackedOperator: no blocks");
  Index m = 0;
  for (const auto& op : b) m += op->rows();
  return m;
}
Index stacked_cols(const std::vector<OperatorPtr>& b) {
  if (b.empty()) throw std::invalid_argument("StackedOperator: no blocks");
  return b.front()->cols();
}

}  // namespace

ComposedOperator::ComposedOperator(std::vector<OperatorPtr> factors)
    : LinearOperator(composed_rows(factors), composed_cols(factors)),
      factors_(std::move(factors)) {
  for (std::size_t i = 0; i + 1 < factors_.size(); ++i) {
    if (factors_[i]->cols() != factors_[i + 1]->rows()) {
      std::ostringstream msg;
      msg << "ComposedOperator: factor " << i << " has " << factors_[i]->cols()
          << " columns but factor " << i + 1 << " has " << factors_[i + 1]->rows() << " rows";
      throw std::invalid_argument(msg.str());
    }
  }
}

void ComposedOperator::apply_into(const ConstVectorRef& x, VectorRef y) const {
  Vector t = x;
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) t = (*it)->apply(t);
  y = t;
}

void ComposedOperator::apply_transpose_into(const ConstVectorRef& y, VectorRef x) const {
  Vector t = y;
  for (const auto& f : factors_) t = f->apply_transpose(t);
  x = t;
}

StackedOperator::StackedOperator(std::vector<OperatorPtr> blocks)
    : LinearOperator(stacked_rows(blocks), stacked_cols(blocks)), blocks_(std::move(blocks)) {
  Index off = 0;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i]->cols() != cols()) {
      std::ostringstream msg;
      msg << "StackedOperator: block " << i << " has " << blocks_[i]->cols()
          << " columns, expected " << cols();
      throw std::invalid_argument(msg.str());
    }
    offsets_.push_back(off);
    off += blocks_[i]->rows();
  }
}

void StackedOperator::apply_into(const ConstVectorRef& x, VectorRef y) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    y.segment(offsets_[i], blocks_[i]->rows()) = blocks_[i]->apply(x);
  }
}

void StackedOperator::apply_transpose_into(const ConstVectorRef& y, VectorRef x) const {
  x.setZero();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    x += blocks_[i]->apply_transpose(y.segment(offsets_[i], blocks_[i]->rows()));
  }
}

Matrix to_dense(const LinearOperator& op, Index max_cols) {
  if (op.cols() > max_cols) {
    std::ostringstream msg;
    msg << "to_dense: operator has " << op.cols() << " columns, limit is " << max_cols;
    throw std::invalid_argument(msg.str());
  }
  Matrix a(op.rows(), op.cols());
  Vector e = Vector::Zero(op.cols());
  for (Index j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    a.col(j) = op.apply(e);
    e[j] = 0.0;
  }
  return a;
}

double adjoint_check(const LinearOperator& op, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("adjoint_check: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vector x(op.cols());
    Vector y(op.rows());
    for (Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    for (Index i = 0; i < y.size(); ++i) y[i] = normal(rng);
    const Vector ax = op.apply(x);
    const Vector aty = op.apply_transpose(y);
    const double lhs = ax.dot(y);
    const double rhs = x.dot(aty);
    const double scale = ax.norm() * y.norm() + 1e-300;
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace gkh
