#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gkh {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using ConstVectorRef = Eigen::Ref<const Vector>;
using VectorRef = Eigen::Ref<Vector>;

/// Abstract forward map x -> A x with access to the transpose.
///
/// Concrete operators are immutable once constructed; `apply` and
/// `apply_transpose` are reentrant and may be called from several threads.
class LinearOperator {
public:
  LinearOperator(Index nrows, Index ncols);
  virtual ~LinearOperator() = default;

  LinearOperator(const LinearOperator&) = delete;
  LinearOperator& operator=(const LinearOperator&) = delete;

  Index rows() const noexcept { return nrows_; }
  Index cols() const noexcept { return ncols_; }

  /// Returns A x. Throws std::invalid_argument if x.size() != cols().
  Vector apply(const ConstVectorRef& x) const;
  /// Returns A^T y. Throws std::invalid_argument if y.size() != rows().
  Vector apply_transpose(const ConstVectorRef& y) const;

  virtual std::string name() const { return "operator"; }

protected:
  virtual void apply_into(const ConstVectorRef& x, VectorRef y) const = 0;
  virtual void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const = 0;

private:
  Index nrows_;
  Index ncols_;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

class IdentityOperator final : public LinearOperator {
public:
  explicit IdentityOperator(Index n);
  std::string name() const override { return "identity"; }

protected:
  void apply_into(const ConstVectorRef& x, VectorRef y) const override;
  void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const override;
};

class ZeroOperator final : public LinearOperator {
public:
  ZeroOperator(Index nrows, Index ncols);
  std::string name() const override { return "zero"; }

protected:
  void apply_into(const ConstVectorRef& x, VectorRef y) const override;
  void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const override;
};

class DenseOperator final : public LinearOperator {
public:
  explicit DenseOperator(Matrix a);
  const Matrix& matrix() const noexcept { return a_; }
  std::string name() const override { return "dense"; }

protected:
  void apply_into(const ConstVectorRef& x, VectorRef y) const override;
  void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const override;

private:
  Matrix a_;
};

class SparseOperator final : public LinearOperator {
public:
  explicit SparseOperator(SparseMatrix a);
  const SparseMatrix& matrix() const noexcept { return a_; }
  std::string name() const override { return "sparse"; }

protected:
  void apply_into(const ConstVectorRef& x, VectorRef y) const override;
  void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const override;

private:
  SparseMatrix a_;
};

class DiagonalOperator final : public LinearOperator {
public:
  explicit DiagonalOperator(Vector diag);
  const Vector& diagonal() const noexcept { return d_; }
  std::string name() const override { return "diagonal"; }

protected:
  void apply_into(const ConstVectorRef& x, VectorRef y) const override;
  void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const override;

private:
  Vector d_;
};

/// Operator defined by a pair of callables. Used for ad hoc maps and tests.
class FunctionOperator final : public LinearOperator {
public:
  using Fn = std::function<void(const ConstVectorRef&, VectorRef)>;
  FunctionOperator(Index nrows, Index ncols, Fn forward, Fn transpose,
                   std::string label = "function");
  std::string name() const override { return label_; }

protected:
  void apply_into(const ConstVectorRef& x, VectorRef y) const override;
  void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const override;

private:
  Fn forward_;
  Fn transpose_;
  std::string label_;
};

/// Product F_1 F_2 ... F_p: apply runs right to left.
class ComposedOperator final : public LinearOperator {
public:
  explicit ComposedOperator(std::vector<OperatorPtr> factors);
  const std::vector<OperatorPtr>& factors() const noexcept { return factors_; }
  std::string name() const override { return "composed"; }

protected:
  void apply_into(const ConstVectorRef& x, VectorRef y) const override;
  void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const override;

private:
  std::vector<OperatorPtr> factors_;
};

/// Vertical stack [A_1; ...; A_K]; all blocks share ncols.
class StackedOperator final : public LinearOperator {
public:
  explicit StackedOperator(std::vector<OperatorPtr> blocks);
  const std::vector<OperatorPtr>& blocks() const noexcept { return blocks_; }
  std::string name() const override { return "stacked"; }

protected:
  void apply_into(const ConstVectorRef& x, VectorRef y) const override;
  void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const override;

private:
  std::vector<OperatorPtr> blocks_;
  std::vector<Index> offsets_;
};

/// Column-by-column assembly through apply on canonical basis vectors.
/// Refuses operators with more than `max_cols` columns.
Matrix to_dense(const LinearOperator& op, Index max_cols = 4096);

/// Max over trials of |<Ax,y> - <x,A^T y>| / (||Ax|| ||y|| + tiny) for
/// seeded Gaussian x, y.
double adjoint_check(const LinearOperator& op, int trials, std::uint64_t seed);

/// Diagonal noise covariance R with positive entries.
class NoiseModel {
public:
  explicit NoiseModel(Vector diag_r);
  static NoiseModel identity(Index m);

  Index size() const noexcept { return r_.size(); }
  const Vector& diag() const noexcept { return r_; }
  const Vector& inv_diag() const noexcept { return r_inv_; }
  const Vector& inv_sqrt_diag() const noexcept { return r_inv_sqrt_; }

  /// R^{-1} x
  Vector apply_inverse(const ConstVectorRef& x) const;
  /// L_R x with L_R^T L_R = R^{-1}
  Vector apply_inv_sqrt(const ConstVectorRef& x) const;
  /// sqrt(sum x_i^2 / r_i)
  double weighted_norm(const ConstVectorRef& x) const;

private:
  Vector r_;
  Vector r_inv_;
  Vector r_inv_sqrt_;
};

}  // namespace gkh
