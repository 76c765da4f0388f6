#include "gkhybrid/covariance.hpp"

#include <Eigen/Eigenvalues>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gkh {

GridGeometry GridGeometry::line(Index n, double h) {
  GridGeometry g;
  g.dims = 1;
  g.shape = {n, 1};
  g.spacing = {h, 1.0};
  g.validate();
  return g;
}

GridGeometry GridGeometry::plane(Index n0, Index n1, double h0, double h1) {
  GridGeometry g;
  g.dims = 2;
  g.shape = {n0, n1};
  g.spacing = {h0, h1};
  g.validate();
  return g;
}

void GridGeometry::validate() const {
  if (dims != 1 && dims != 2) throw std::invalid_argument("grid: dims must be 1 or 2");
  if (shape[0] < 1 || shape[1] < 1) throw std::invalid_argument("grid: shape must be positive");
  if (dims == 1 && shape[1] != 1) throw std::invalid_argument("grid: 1D grid must have shape[1] = 1");
  if (!(spacing[0] > 0.0) || (dims == 2 && !(spacing[1] > 0.0))) {
    throw std::invalid_argument("grid: spacing must be positive");
  }
}

Matrix GridGeometry::points() const {
  Matrix p(size(), dims);
  for (Index i1 = 0; i1 < shape[1]; ++i1) {
    for (Index i0 = 0; i0 < shape[0]; ++i0) {
      const Index idx = i0 + shape[0] * i1;
      p(idx, 0) = static_cast<double>(i0) * spacing[0];
      if (dims == 2) p(idx, 1) = static_cast<double>(i1) * spacing[1];
    }
  }
  return p;
}

Matrix assemble_dense(const KernelSpec& spec, const Matrix& points, Index dense_limit) {
  spec.validate();
  const Index n = points.rows();
  if (n > dense_limit) {
    std::ostringstream msg;
    msg << "assemble_dense: " << n << " points exceeds the dense limit of " << dense_limit;
    throw std::invalid_argument(msg.str());
  }
  Matrix q(n, n);
  for (Index j = 0; j < n; ++j) {
    q(j, j) = kernel_value(spec, 0.0);
    for (Index i = j + 1; i < n; ++i) {
      const double v = kernel_value(spec, (points.row(i) - points.row(j)).norm());
      q(i, j) = v;
      q(j, i) = v;
    }
  }
  return q;
}

Matrix assemble_dense(const KernelSpec& spec, const GridGeometry& grid, Index dense_limit) {
  grid.validate();
  if (grid.size() > dense_limit) {
    std::ostringstream msg;
    msg << "assemble_dense: " << grid.size() << " points exceeds the dense limit of "
        << dense_limit;
    throw std::invalid_argument(msg.str());
  }
  return assemble_dense(spec, grid.points(), dense_limit);
}

Index next_fft_size(Index n) {
  if (n <= 1) return 1;
  for (Index c = n;; ++c) {
    Index r = c;
    for (Index p : {2, 3, 5, 7}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return c;
  }
}

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct RealBuffer {
  explicit RealBuffer(Index n) : data(fftw_alloc_real(static_cast<std::size_t>(n))) {
    if (!data) throw std::bad_alloc();
  }
  ~RealBuffer() { fftw_free(data); }
  RealBuffer(const RealBuffer&) = delete;
  RealBuffer& operator=(const RealBuffer&) = delete;
  double* data;
};

struct ComplexBuffer {
  explicit ComplexBuffer(Index n) : data(fftw_alloc_complex(static_cast<std::size_t>(n))) {
    if (!data) throw std::bad_alloc();
  }
  ~ComplexBuffer() { fftw_free(data); }
  ComplexBuffer(const ComplexBuffer&) = delete;
  ComplexBuffer& operator=(const ComplexBuffer&) = delete;
  fftw_complex* data;
};

}  // namespace

struct StationaryCovarianceOperator::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  Index real_size = 0;
  Index complex_size = 0;

  explicit Plans(const std::array<Index, 2>& padded, int dims) {
    int n[2];
    int rank;
    if (dims == 1) {
      rank = 1;
      n[0] = static_cast<int>(padded[0]);
      real_size = padded[0];
      complex_size = padded[0] / 2 + 1;
    } else {
      rank = 2;
      n[0] = static_cast<int>(padded[1]);
      n[1] = static_cast<int>(padded[0]);
      real_size = padded[0] * padded[1];
      complex_size = padded[1] * (padded[0] / 2 + 1);
    }
    RealBuffer r(real_size);
    ComplexBuffer c(complex_size);
    std::lock_guard lock(fftw_planner_mutex());
    forward = fftw_plan_dft_r2c(rank, n, r.data, c.data, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r(rank, n, c.data, r.data, FFTW_ESTIMATE);
    if (!forward || !backward) throw std::runtime_error("fftw: plan creation failed");
  }

  ~Plans() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }

  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

StationaryCovarianceOperator::StationaryCovarianceOperator(const KernelSpec& spec,
                                                           const GridGeometry& grid,
                                                           CirculantOptions options)
    : LinearOperator(grid.size(), grid.size()), spec_(spec), grid_(grid) {
  spec_.validate();
  grid_.validate();
  if (!(options.pad_factor >= 1.0)) {
    throw std::invalid_argument("circulant embedding: pad_factor must be >= 1");
  }
  for (int a = 0; a < 2; ++a) {
    if (a < grid_.dims) {
      const Index n = grid_.shape[a];
      const auto minimum = static_cast<Index>(
          std::ceil(options.pad_factor * static_cast<double>(2 * n - 1)));
      padded_[a] = next_fft_size(std::max<Index>(minimum, 1));
    } else {
      padded_[a] = 1;
    }
  }
  plans_ = std::make_unique<Plans>(padded_, grid_.dims);

  // First column of the symmetric circulant: kernel at wrapped physical distance.
  RealBuffer c(plans_->real_size);
  for (Index j1 = 0; j1 < padded_[1]; ++j1) {
    const double d1 = static_cast<double>(std::min(j1, padded_[1] - j1)) * grid_.spacing[1];
    for (Index j0 = 0; j0 < padded_[0]; ++j0) {
      const double d0 = static_cast<double>(std::min(j0, padded_[0] - j0)) * grid_.spacing[0];
      const double r = grid_.dims == 2 ? std::hypot(d0, d1) : d0;
      c.data[j0 + padded_[0] * j1] = kernel_value(spec_, r);
    }
  }
  ComplexBuffer f(plans_->complex_size);
  fftw_execute_dft_r2c(plans_->forward, c.data, f.data);

  spectrum_.resize(plans_->complex_size);
  for (Index i = 0; i < plans_->complex_size; ++i) spectrum_[i] = f.data[i][0];
  const double max_ev = spectrum_.maxCoeff();
  min_raw_ = spectrum_.minCoeff();
  if (min_raw_ < -options.psd_tol * max_ev) {
    std::ostringstream msg;
    msg << "embedding not PSD; increase padding (min eigenvalue " << min_raw_ << ", max "
        << max_ev << ", kernel " << spec_.describe() << ")";
    if (options.require_psd) throw std::runtime_error(msg.str());
    // Products stay exact with the indefinite embedding; only sampling needs a
    // square root.
    indefinite_ = true;
    sqrt_spectrum_ = spectrum_.cwiseMax(0.0).cwiseSqrt();
    return;
  }
  for (Index i = 0; i < spectrum_.size(); ++i) {
    if (spectrum_[i] < 0.0) {
      spectrum_[i] = 0.0;
      ++clamped_;
    }
  }
  if (clamped_ > 0) {
    std::clog << "warning: circulant embedding clamped " << clamped_
              << " slightly negative eigenvalues (min " << min_raw_ << ")\n";
  }
  sqrt_spectrum_ = spectrum_.cwiseSqrt();
}

StationaryCovarianceOperator::~StationaryCovarianceOperator() = default;

void StationaryCovarianceOperator::multiply_spectral(const ConstVectorRef& x, VectorRef y,
                                                     const Vector& weights) const {
  const Index total = plans_->real_size;
  RealBuffer work(total);
  ComplexBuffer freq(plans_->complex_size);
  std::fill(work.data, work.data + total, 0.0);
  const Index n0 = grid_.shape[0];
  const Index n1 = grid_.shape[1];
  for (Index i1 = 0; i1 < n1; ++i1) {
    for (Index i0 = 0; i0 < n0; ++i0) work.data[i0 + padded_[0] * i1] = x[i0 + n0 * i1];
  }
  fftw_execute_dft_r2c(plans_->forward, work.data, freq.data);
  const double scale = 1.0 / static_cast<double>(total);
  for (Index i = 0; i < plans_->complex_size; ++i) {
    const double w = weights[i] * scale;
    freq.data[i][0] *= w;
    freq.data[i][1] *= w;
  }
  fftw_execute_dft_c2r(plans_->backward, freq.data, work.data);
  for (Index i1 = 0; i1 < n1; ++i1) {
    for (Index i0 = 0; i0 < n0; ++i0) y[i0 + n0 * i1] = work.data[i0 + padded_[0] * i1];
  }
}

void StationaryCovarianceOperator::apply_into(const ConstVectorRef& x, VectorRef y) const {
  multiply_spectral(x, y, spectrum_);
}

void StationaryCovarianceOperator::apply_transpose_into(const ConstVectorRef& y,
                                                        VectorRef x) const {
  multiply_spectral(y, x, spectrum_);
}

Vector StationaryCovarianceOperator::sample(std::uint64_t seed) const {
  if (indefinite_) {
    throw std::runtime_error("embedding not PSD; increase padding (sampling needs a PSD embedding)");
  }
  const Index total = plans_->real_size;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  RealBuffer work(total);
  ComplexBuffer freq(plans_->complex_size);
  for (Index i = 0; i < total; ++i) work.data[i] = normal(rng);
  fftw_execute_dft_r2c(plans_->forward, work.data, freq.data);
  const double scale = 1.0 / static_cast<double>(total);
  for (Index i = 0; i < plans_->complex_size; ++i) {
    const double w = sqrt_spectrum_[i] * scale;
    freq.data[i][0] *= w;
    freq.data[i][1] *= w;
  }
  fftw_execute_dft_c2r(plans_->backward, freq.data, work.data);
  Vector out(rows());
  const Index n0 = grid_.shape[0];
  for (Index i1 = 0; i1 < grid_.shape[1]; ++i1) {
    for (Index i0 = 0; i0 < n0; ++i0) out[i0 + n0 * i1] = work.data[i0 + padded_[0] * i1];
  }
  return out;
}

std::shared_ptr<const StationaryCovarianceOperator> build_fft_operator(
    const KernelSpec& spec, const GridGeometry& grid, CirculantOptions options) {
  return std::make_shared<const StationaryCovarianceOperator>(spec, grid, options);
}

Vector sample_field(const Matrix& q, std::uint64_t seed, double psd_tol) {
  return sample_field(q, Vector::Zero(q.rows()), seed, psd_tol);
}

Vector sample_field(const Matrix& q, const Vector& mu, std::uint64_t seed, double psd_tol) {
  if (q.rows() != q.cols()) throw std::invalid_argument("sample_field: Q must be square");
  if (mu.size() != q.rows()) throw std::invalid_argument("sample_field: mean has wrong length");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
  if (eig.info() != Eigen::Success) throw std::runtime_error("sample_field: eigensolver failed");
  Vector lam = eig.eigenvalues();
  const double max_ev = lam.maxCoeff();
  if (lam.minCoeff() < -psd_tol * std::max(max_ev, 0.0)) {
    throw std::runtime_error("sample_field: covariance is indefinite beyond tolerance");
  }
  lam = lam.cwiseMax(0.0).cwiseSqrt();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector z(q.rows());
  for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return mu + eig.eigenvectors() * lam.cwiseProduct(z);
}

Vector sample_field(const StationaryCovarianceOperator& q, std::uint64_t seed) {
  return q.sample(seed);
}

Vector sample_field(const StationaryCovarianceOperator& q, const Vector& mu, std::uint64_t seed) {
  if (mu.size() != q.rows()) throw std::invalid_argument("sample_field: mean has wrong length");
  return mu + q.sample(seed);
}

}  // namespace gkh
