#pragma once

#include "gkhybrid/linop.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>

namespace gkh {

enum class KernelFamily { matern, gamma_exponential, gaussian };

std::string to_string(KernelFamily f);
KernelFamily parse_kernel_family(const std::string& s);

/// Stationary isotropic covariance kernel.
///
///   matern:             amplitude * 2^{1-nu}/Gamma(nu) (sqrt(2 nu) alpha r)^nu K_nu(sqrt(2 nu) alpha r)
///                       nu = +inf evaluates the pointwise limit amplitude * exp(-(alpha r)^2 / 2)
///   gamma_exponential:  amplitude * exp(-(r / ell)^gamma),  0 < gamma <= 2
///   gaussian:           amplitude * exp(-(alpha r)^2)
struct KernelSpec {
  KernelFamily family = KernelFamily::matern;
  double nu = 0.5;
  double alpha = 1.0;
  double ell = 1.0;
  double gamma = 1.0;
  double amplitude = 1.0;

  static KernelSpec matern(double nu, double alpha, double amplitude = 1.0);
  static KernelSpec gamma_exponential(double gamma, double ell, double amplitude = 1.0);
  static KernelSpec gaussian(double alpha, double amplitude = 1.0);

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  std::string describe() const;
};

/// C(r) for r >= 0 with C(0) = amplitude.
double kernel_value(const KernelSpec& spec, double r);

namespace detail {
/// 2^{1-nu}/Gamma(nu) z^nu K_nu(z) for general nu > 0 (no closed forms).
double matern_correlation(double nu, double z);
/// log K_nu(z) by the uniform (Debye) asymptotic expansion; accurate for large nu.
double log_bessel_k_uniform(double nu, double z);
}  // namespace detail

/// Regular grid of 1 or 2 dimensions. Axis 0 varies fastest in the linear
/// index: idx = i0 + n0 * i1.
struct GridGeometry {
  int dims = 1;
  std::array<Index, 2> shape{1, 1};
  std::array<double, 2> spacing{1.0, 1.0};

  static GridGeometry line(Index n, double h);
  static GridGeometry plane(Index n0, Index n1, double h0, double h1);

  Index size() const noexcept { return shape[0] * shape[1]; }
  void validate() const;
  /// n x dims matrix of physical coordinates (i * h per axis).
  Matrix points() const;
};

inline constexpr Index kDefaultDenseLimit = 4096;

/// Q_ij = kernel_value(||x_i - x_j||); rows of `points` are coordinates.
Matrix assemble_dense(const KernelSpec& spec, const Matrix& points,
                      Index dense_limit = kDefaultDenseLimit);
Matrix assemble_dense(const KernelSpec& spec, const GridGeometry& grid,
                      Index dense_limit = kDefaultDenseLimit);

struct CirculantOptions {
  /// Padded length per axis is at least pad_factor * (2 n - 1), rounded up to
  /// a 2^a 3^b 5^c 7^d size.
  double pad_factor = 1.0;
  /// Spectrum values below -psd_tol * max are rejected; values in
  /// [-psd_tol * max, 0) are clamped to zero.
  double psd_tol = 1e-10;
  /// When false, an indefinite embedding is kept unclamped: products remain
  /// exact, but sample() throws.
  bool require_psd = true;
};

/// Q x for a stationary kernel on a regular grid via circulant embedding.
class StationaryCovarianceOperator final : public LinearOperator {
public:
  StationaryCovarianceOperator(const KernelSpec& spec, const GridGeometry& grid,
                               CirculantOptions options = {});
  ~StationaryCovarianceOperator() override;

  const KernelSpec& kernel() const noexcept { return spec_; }
  const GridGeometry& grid() const noexcept { return grid_; }
  std::array<Index, 2> padded_shape() const noexcept { return padded_; }
  /// Eigenvalues of the circulant embedding in r2c layout (after clamping).
  const Vector& embedded_spectrum() const noexcept { return spectrum_; }
  double min_raw_eigenvalue() const noexcept { return min_raw_; }
  Index clamped_count() const noexcept { return clamped_; }
  /// True when require_psd was off and the embedding came out indefinite.
  bool indefinite() const noexcept { return indefinite_; }

  /// Circulant square-root sample on the grid: Q^{1/2}-distributed, zero mean.
  Vector sample(std::uint64_t seed) const;

  std::string name() const override { return "stationary-fft"; }

protected:
  void apply_into(const ConstVectorRef& x, VectorRef y) const override;
  void apply_transpose_into(const ConstVectorRef& y, VectorRef x) const override;

private:
  struct Plans;
  void multiply_spectral(const ConstVectorRef& x, VectorRef y, const Vector& weights) const;

  KernelSpec spec_;
  GridGeometry grid_;
  std::array<Index, 2> padded_{1, 1};
  Vector spectrum_;
  Vector sqrt_spectrum_;
  double min_raw_ = 0.0;
  Index clamped_ = 0;
  bool indefinite_ = false;
  std::unique_ptr<Plans> plans_;
};

std::shared_ptr<const StationaryCovarianceOperator> build_fft_operator(
    const KernelSpec& spec, const GridGeometry& grid, CirculantOptions options = {});

/// Smallest 2^a 3^b 5^c 7^d >= n.
Index next_fft_size(Index n);

/// mu + F z with F F^T = Q from the symmetric eigendecomposition of Q; negative
/// eigenvalues above -psd_tol * max are clamped, below that an error is thrown.
Vector sample_field(const Matrix& q, std::uint64_t seed, double psd_tol = 1e-10);
Vector sample_field(const Matrix& q, const Vector& mu, std::uint64_t seed, double psd_tol = 1e-10);
Vector sample_field(const StationaryCovarianceOperator& q, std::uint64_t seed);
Vector sample_field(const StationaryCovarianceOperator& q, const Vector& mu, std::uint64_t seed);

}  // namespace gkh
