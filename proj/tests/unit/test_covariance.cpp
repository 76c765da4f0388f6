#include "gkhybrid/covariance.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gkh {
namespace {

using test::gaussian_vector;

// K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt by the trapezoidal rule,
// which converges geometrically for this integrand.
double bessel_k_integral(double nu, double z) {
  const double h = 1e-3;
  double sum = 0.5 * std::exp(-z);
  for (int i = 1;; ++i) {
    const double t = i * h;
    const double term = std::exp(-z * std::cosh(t)) * std::cosh(nu * t);
    sum += term;
    if (term < 1e-300 || (t > 5.0 && term < 1e-18 * sum)) break;
  }
  return sum * h;
}

double matern_oracle(double nu, double alpha, double r) {
  if (r == 0.0) return 1.0;
  const double z = std::sqrt(2.0 * nu) * alpha * r;
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) * bessel_k_integral(nu, z);
}

TEST(Kernel, MaternHalfIsExponential) {
  const KernelSpec k = KernelSpec::matern(0.5, 2.0);
  EXPECT_NEAR(kernel_value(k, 1.0), 0.135335283236613, 1e-12);
  EXPECT_NEAR(kernel_value(k, 1.0), matern_oracle(0.5, 2.0, 1.0), 1e-10);
  for (double r = 0.0; r <= 5.0; r += 0.05) {
    EXPECT_NEAR(kernel_value(k, r), std::exp(-2.0 * r), 1e-12) << r;
  }
}

TEST(Kernel, MaternThreeHalves) {
  const KernelSpec k = KernelSpec::matern(1.5, 1.0);
  const double s3 = std::sqrt(3.0);
  EXPECT_NEAR(kernel_value(k, 1.0), (1.0 + s3) * std::exp(-s3), 1e-12);
  EXPECT_NEAR(kernel_value(k, 1.0), 0.4833577, 1e-7);
  EXPECT_NEAR(kernel_value(k, 1.0), matern_oracle(1.5, 1.0, 1.0), 1e-10);
}

TEST(Kernel, ClosedFormsMatchGeneralPath) {
  for (double nu : {0.5, 1.5, 2.5}) {
    for (double z : {1e-3, 0.1, 0.7, 2.0, 5.0, 12.0}) {
      const double closed = kernel_value(KernelSpec::matern(nu, 1.0), z / std::sqrt(2.0 * nu));
      EXPECT_NEAR(detail::matern_correlation(nu, z), closed, 1e-10 * std::max(closed, 1e-3))
          << "nu=" << nu << " z=" << z;
    }
  }
}

TEST(Kernel, GeneralNuMatchesIntegralOracle) {
  for (double nu : {0.3, 1.0, 2.2, 4.0, 7.5}) {
    for (double r : {0.05, 0.4, 1.0, 2.5}) {
      const double expect = matern_oracle(nu, 1.3, r);
      EXPECT_NEAR(kernel_value(KernelSpec::matern(nu, 1.3), r), expect, 1e-9 * std::max(expect, 1e-6))
          << "nu=" << nu << " r=" << r;
    }
  }
}

TEST(Kernel, LargeNuApproachesGaussianLimit) {
  const double alpha = 1.7;
  const KernelSpec big = KernelSpec::matern(1e3, alpha);
  const KernelSpec inf = KernelSpec::matern(std::numeric_limits<double>::infinity(), alpha);
  for (double r = 0.0; r <= 3.0 / alpha; r += 0.05) {
    const double limit = std::exp(-0.5 * alpha * alpha * r * r);
    EXPECT_NEAR(kernel_value(big, r), limit, 1e-2) << r;
    EXPECT_NEAR(kernel_value(inf, r), limit, 1e-15) << r;
  }
}

TEST(Kernel, ValueAtZeroIsAmplitude) {
  EXPECT_EQ(kernel_value(KernelSpec::matern(2.5, 3.0, 0.7), 0.0), 0.7);
  EXPECT_EQ(kernel_value(KernelSpec::matern(0.9, 3.0, 0.7), 0.0), 0.7);
  EXPECT_EQ(kernel_value(KernelSpec::gamma_exponential(1.3, 2.0, 0.7), 0.0), 0.7);
  EXPECT_EQ(kernel_value(KernelSpec::gaussian(2.0, 0.7), 0.0), 0.7);
}

TEST(Kernel, GammaExponentialAndGaussian) {
  EXPECT_NEAR(kernel_value(KernelSpec::gamma_exponential(2.0, 1.0), 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(kernel_value(KernelSpec::gamma_exponential(1.0, 2.0), 1.0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(kernel_value(KernelSpec::gaussian(2.0), 0.5), std::exp(-1.0), 1e-15);
}

TEST(Kernel, NonincreasingInDistance) {
  const KernelSpec specs[] = {KernelSpec::matern(0.5, 1.0), KernelSpec::matern(2.5, 1.0),
                              KernelSpec::matern(3.3, 1.0), KernelSpec::gamma_exponential(1.5, 1.0),
                              KernelSpec::gaussian(1.0)};
  for (const auto& k : specs) {
    double prev = kernel_value(k, 0.0);
    for (double r = 0.01; r < 8.0; r += 0.01) {
      const double v = kernel_value(k, r);
      EXPECT_LE(v, prev + 1e-15) << k.describe() << " r=" << r;
      prev = v;
    }
  }
}

TEST(Kernel, ValidationNamesField) {
  auto message = [](auto make) {
    try {
      make().validate();
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message([] { return KernelSpec::matern(0.0, 1.0); }).find("nu"), std::string::npos);
  EXPECT_NE(message([] { return KernelSpec::matern(1.0, -1.0); }).find("alpha"), std::string::npos);
  EXPECT_NE(message([] { return KernelSpec::gamma_exponential(2.5, 1.0); }).find("gamma"), std::string::npos);
  EXPECT_NE(message([] { return KernelSpec::gamma_exponential(1.0, 0.0); }).find("ell"), std::string::npos);
  EXPECT_THROW(kernel_value(KernelSpec::matern(0.5, 1.0), -1.0), std::invalid_argument);
  EXPECT_THROW(parse_kernel_family("cauchy"), std::invalid_argument);
}

TEST(AssembleDense, SmallExamples) {
  const KernelSpec k = KernelSpec::matern(0.5, 2.0, 1.5);
  Matrix one(1, 2);
  one << 0.3, 0.4;
  const Matrix q1 = assemble_dense(k, one);
  ASSERT_EQ(q1.rows(), 1);
  EXPECT_EQ(q1(0, 0), 1.5);

  Matrix two(2, 1);
  two << 0.0, 0.8;
  const Matrix q2 = assemble_dense(KernelSpec::matern(0.5, 2.0), two);
  EXPECT_NEAR(q2(0, 1), std::exp(-1.6), 1e-15);

  const Matrix pts = test::gaussian_matrix(40, 2, 5);
  const Matrix q = assemble_dense(KernelSpec::matern(1.5, 0.8), pts);
  EXPECT_EQ(q, q.transpose());
  EXPECT_THROW(assemble_dense(k, GridGeometry::line(100, 1.0), 50), std::invalid_argument);
}

TEST(StationaryFft, MatchesDense1D) {
  const GridGeometry g = GridGeometry::line(8, 0.25);
  const KernelSpec k = KernelSpec::matern(0.5, 1.0);
  auto op = build_fft_operator(k, g);
  const Matrix q = assemble_dense(k, g);
  for (int t = 0; t < 10; ++t) {
    const Vector x = gaussian_vector(8, 100 + t);
    EXPECT_LE(test::rel_diff(op->apply(x), q * x), 1e-12);
  }
  EXPECT_LE(test::rel_diff(Vector(op->apply(Vector::Unit(8, 0))), Vector(q.col(0))), 1e-14);
}

TEST(StationaryFft, MatchesDense2DGaussian) {
  const GridGeometry g = GridGeometry::plane(16, 16, 1.0 / 16, 1.0 / 16);
  const KernelSpec k = KernelSpec::gaussian(4.0);
  CirculantOptions opts;
  opts.pad_factor = 2.0;
  auto op = build_fft_operator(k, g, opts);
  const Matrix q = assemble_dense(k, g);
  for (int t = 0; t < 10; ++t) {
    const Vector x = gaussian_vector(g.size(), 200 + t);
    EXPECT_LE(test::rel_diff(op->apply(x), q * x), 1e-10);
  }
}

TEST(StationaryFft, RectangularGridAndAllFamilies) {
  const GridGeometry g = GridGeometry::plane(12, 7, 0.3, 0.5);
  const KernelSpec specs[] = {KernelSpec::matern(0.5, 1.0), KernelSpec::matern(1.5, 1.0),
                              KernelSpec::matern(2.5, 1.0), KernelSpec::matern(1.2, 1.0),
                              KernelSpec::gamma_exponential(1.0, 1.0),
                              KernelSpec::gamma_exponential(2.0, 1.0)};
  CirculantOptions opts;
  opts.require_psd = false;  // exactness of the product does not need a PSD embedding
  for (const auto& k : specs) {
    auto op = build_fft_operator(k, g, opts);
    const Matrix q = assemble_dense(k, g);
    const Vector x = gaussian_vector(g.size(), 7);
    EXPECT_LE(test::rel_diff(op->apply(x), q * x), 1e-10) << k.describe();
    EXPECT_LE(adjoint_check(*op, 20, 3), 1e-10) << k.describe();
  }
}

TEST(StationaryFft, QuadraticFormNonnegative) {
  const GridGeometry g = GridGeometry::plane(20, 20, 0.05, 0.05);
  CirculantOptions opts;
  opts.pad_factor = 2.0;
  auto op = build_fft_operator(KernelSpec::matern(1.5, 4.0), g, opts);
  EXPECT_GT(op->min_raw_eigenvalue(), 0.0);
  for (int t = 0; t < 100; ++t) {
    const Vector x = gaussian_vector(g.size(), 300 + t);
    EXPECT_GE(x.dot(op->apply(x)), -1e-10 * x.squaredNorm());
  }
}

TEST(StationaryFft, PaddingIsFftFriendly) {
  auto op = build_fft_operator(KernelSpec::matern(0.5, 5.0), GridGeometry::line(50, 0.02));
  EXPECT_GE(op->padded_shape()[0], 99);
  EXPECT_EQ(next_fft_size(op->padded_shape()[0]), op->padded_shape()[0]);
  EXPECT_EQ(next_fft_size(99), 100);
  EXPECT_EQ(next_fft_size(127), 128);
  EXPECT_EQ(next_fft_size(11), 12);
}

TEST(StationaryFft, IndefiniteEmbeddingIsRejected) {
  const GridGeometry g = GridGeometry::plane(32, 32, 1.0, 1.0);
  const KernelSpec k = KernelSpec::matern(0.5, 0.007);
  try {
    build_fft_operator(k, g);
    FAIL() << "expected the embedding to be rejected";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("increase padding"), std::string::npos) << e.what();
  }
  CirculantOptions opts;
  opts.require_psd = false;
  auto op = build_fft_operator(k, g, opts);
  EXPECT_TRUE(op->indefinite());
  const Matrix q = assemble_dense(k, g);
  const Vector x = gaussian_vector(g.size(), 9);
  EXPECT_LE(test::rel_diff(op->apply(x), q * x), 1e-10);
  EXPECT_THROW(op->sample(1), std::runtime_error);
}

TEST(Sampling, WhiteNoiseVariance) {
  // alpha * spacing = 50 makes every off-diagonal entry negligible.
  auto op = build_fft_operator(KernelSpec::matern(0.5, 50.0), GridGeometry::line(10000, 1.0));
  const Vector s = sample_field(*op, 17);
  const double mean = s.mean();
  const double var = (s.array() - mean).square().sum() / static_cast<double>(s.size() - 1);
  EXPECT_NEAR(var, 1.0, 0.1);
}

TEST(Sampling, SeededDeterminism) {
  auto op = build_fft_operator(KernelSpec::matern(1.5, 3.0), GridGeometry::plane(16, 16, 0.1, 0.1));
  EXPECT_EQ(sample_field(*op, 5), sample_field(*op, 5));
  EXPECT_NE(sample_field(*op, 5), sample_field(*op, 6));
  const Matrix q = assemble_dense(KernelSpec::matern(1.5, 3.0), GridGeometry::line(30, 0.1));
  EXPECT_EQ(sample_field(q, 3), sample_field(q, 3));
  const Vector mu = Vector::Constant(30, 2.0);
  EXPECT_LE((sample_field(q, mu, 3) - mu - sample_field(q, 3)).norm(), 1e-14);
}

TEST(Sampling, DenseSampleCovarianceMatchesQ) {
  const Matrix q = assemble_dense(KernelSpec::matern(2.5, 2.0), GridGeometry::line(6, 0.3));
  Matrix acc = Matrix::Zero(6, 6);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const Vector s = sample_field(q, 1000 + i);
    acc += s * s.transpose();
  }
  acc /= draws;
  EXPECT_LE((acc - q).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Sampling, SmootherKernelHasHigherLagOneCorrelation) {
  const GridGeometry g = GridGeometry::line(2000, 0.01);
  auto lag1 = [](const Vector& s) {
    const Vector c = s.array() - s.mean();
    return c.head(c.size() - 1).dot(c.tail(c.size() - 1)) / c.squaredNorm();
  };
  auto rough = build_fft_operator(KernelSpec::matern(0.5, 5.0), g);
  auto smooth = build_fft_operator(KernelSpec::matern(2.5, 5.0), g);
  EXPECT_GT(lag1(sample_field(*smooth, 4)), lag1(sample_field(*rough, 4)));
}

TEST(Sampling, IndefiniteDenseIsRejected) {
  Matrix q(2, 2);
  q << 1, 2, 2, 1;
  EXPECT_THROW(sample_field(q, 1), std::runtime_error);
}

}  // namespace
}  // namespace gkh
