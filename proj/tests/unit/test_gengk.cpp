#include "gkhybrid/gengk.hpp"
#include "gkhybrid/reference.hpp"
#include "test_support.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <memory>
#include <stdexcept>

namespace gkh {
namespace {

using test::heat_setup;

OperatorPtr dense_op(const Matrix& a) { return std::make_shared<DenseOperator>(a); }

TEST(GenGK, InitWithIdentityWeights) {
  const Vector b = 2.0 * Vector::Unit(3, 0);
  GenGK gk(dense_op(test::gaussian_matrix(3, 3, 1)), NoiseModel::identity(3),
           std::make_shared<IdentityOperator>(3), b);
  EXPECT_DOUBLE_EQ(gk.beta(1), 2.0);
  EXPECT_EQ(Vector(gk.U(1).col(0)), Vector::Unit(3, 0));
}

TEST(GenGK, InitAllIdentityGivesNormalizedData) {
  const Vector b = test::gaussian_vector(4, 2);
  GenGK gk(std::make_shared<IdentityOperator>(4), NoiseModel::identity(4),
           std::make_shared<IdentityOperator>(4), b);
  EXPECT_LE((gk.V(1).col(0) - b / b.norm()).norm(), 1e-15);
  EXPECT_NEAR(gk.alpha(1), 1.0, 1e-15);
}

TEST(GenGK, InitUsesWeightedNorm) {
  Vector r(1);
  r << 4.0;
  Vector b(1);
  b << 2.0;
  GenGK gk(dense_op(Matrix::Ones(1, 1)), NoiseModel(r), std::make_shared<IdentityOperator>(1), b);
  EXPECT_DOUBLE_EQ(gk.beta(1), 1.0);
  EXPECT_DOUBLE_EQ(gk.U(1)(0, 0), 2.0);
}

TEST(GenGK, InitErrors) {
  auto id = std::make_shared<IdentityOperator>(2);
  try {
    GenGK(id, NoiseModel::identity(2), id, Vector::Zero(2));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("zero data vector"), std::string::npos);
  }
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  try {
    GenGK(dense_op(a), NoiseModel::identity(2), id, Vector::Unit(2, 1));
    FAIL();
  } catch (const GenGKBreakdown& e) {
    EXPECT_NE(std::string(e.what()).find("orthogonal to range"), std::string::npos);
  }
}

TEST(GenGK, ImmediateBreakdownOnTrivialProblem) {
  auto id = std::make_shared<IdentityOperator>(3);
  GenGK gk(id, NoiseModel::identity(3), id, Vector::Unit(3, 0));
  gk.step();
  EXPECT_EQ(gk.k(), 1);
  EXPECT_TRUE(gk.broken_down());
  EXPECT_TRUE(gk.beta_breakdown());
  EXPECT_EQ(gk.beta(2), 0.0);
  EXPECT_THROW(gk.step(), GenGKBreakdown);
}

struct Relations {
  double u1 = 0.0;
  double rel14 = 0.0;
  double rel15 = 0.0;
  double orth_u = 0.0;
  double orth_v = 0.0;
};

Relations check_relations(const GenGK& gk, const Matrix& a, const Matrix& q, const Vector& r_diag,
                          const Vector& b) {
  const Index k = gk.k();
  const Matrix U = gk.U(k + 1);
  const Matrix V = gk.V(k);
  const Matrix B = gk.bidiagonal();
  const Matrix r_inv = r_diag.cwiseInverse().asDiagonal();
  Relations out;
  out.u1 = (gk.beta(1) * U.col(0) - b).norm() / b.norm();
  const Matrix lhs14 = a * q * V;
  out.rel14 = (lhs14 - U * B).norm() / lhs14.norm();
  const Matrix lhs15 = a.transpose() * r_inv * U;
  Matrix rhs15 = V * B.transpose();
  rhs15.col(k) += gk.alpha(k + 1) * gk.V(k + 1).col(k);
  out.rel15 = (lhs15 - rhs15).norm() / lhs15.norm();
  const Matrix uu = U.transpose() * r_inv * U - Matrix::Identity(k + 1, k + 1);
  const Matrix vv = gk.V(k + 1).transpose() * q * gk.V(k + 1) - Matrix::Identity(k + 1, k + 1);
  out.orth_u = uu.cwiseAbs().maxCoeff();
  out.orth_v = vv.cwiseAbs().maxCoeff();
  return out;
}

TEST(GenGK, HeatRelationsHold) {
  const auto s = heat_setup();
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (int i = 0; i < 10; ++i) gk.step();
  const Relations rel = check_relations(gk, s.A, s.Q, s.noise.diag(), s.b());
  EXPECT_LE(rel.u1, 1e-15);
  EXPECT_LE(rel.rel14, 1e-10);
  EXPECT_LE(rel.rel15, 1e-10);
  EXPECT_LE(rel.orth_u, 1e-8);
  EXPECT_LE(rel.orth_v, 1e-8);
  EXPECT_NEAR(gk.orthogonality_u(), rel.orth_u, 1e-12);
}

TEST(GenGK, RelationsWithNontrivialR) {
  const auto s = heat_setup(48);
  const Vector r = (test::gaussian_vector(48, 9).array().abs() + 0.5).matrix();
  const NoiseModel noise(r);
  GenGK gk(s.a_op, noise, s.q_op, s.b());
  for (int i = 0; i < 20; ++i) gk.step();
  const Relations rel = check_relations(gk, s.A, s.Q, r, s.b());
  EXPECT_LE(rel.rel14, 1e-10);
  EXPECT_LE(rel.rel15, 1e-10);
  EXPECT_LE(rel.orth_u, 1e-8);
  EXPECT_LE(rel.orth_v, 1e-8);
}

TEST(GenGK, EntriesAreNonnegative) {
  const auto s = heat_setup();
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (int i = 0; i < 30 && !gk.broken_down(); ++i) gk.step();
  EXPECT_GE(gk.alphas().minCoeff(), 0.0);
  EXPECT_GE(gk.betas().minCoeff(), 0.0);
}

TEST(GenGK, OrthogonalityLostWithoutReorth) {
  const auto s = heat_setup();
  GenGKOptions opts;
  opts.reorth = false;
  GenGK plain(s.a_op, s.noise, s.q_op, s.b(), opts);
  GenGK full(s.a_op, s.noise, s.q_op, s.b());
  for (int i = 0; i < 50; ++i) {
    plain.step();
    full.step();
  }
  EXPECT_GT(plain.orthogonality_v(), 1e-4);
  EXPECT_LE(full.orthogonality_v(), 1e-8);
  EXPECT_LE(full.orthogonality_u(), 1e-8);
}

TEST(GenGK, OneProductWithQPerStep) {
  const auto s = heat_setup();
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  EXPECT_EQ(gk.q_products(), 1);
  for (int i = 0; i < 12; ++i) gk.step();
  EXPECT_EQ(gk.q_products(), 13);
  EXPECT_EQ(gk.a_products(), 12);
  EXPECT_EQ(gk.at_products(), 13);
}

TEST(GenGK, AugmentedFirstStepByHand) {
  const auto s = heat_setup();
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  gk.step();
  const Matrix bbar = gk.augmented();
  ASSERT_EQ(bbar.rows(), 2);
  ASSERT_EQ(bbar.cols(), 1);
  const double a1 = gk.alpha(1), b2 = gk.beta(2), a2 = gk.alpha(2);
  EXPECT_NEAR(bbar(0, 0), a1 * a1 + b2 * b2, 1e-15 * bbar(0, 0));
  EXPECT_NEAR(bbar(1, 0), b2 * a2, 1e-15 * std::abs(bbar(1, 0)));
}

TEST(GenGK, AugmentedSatisfiesNormalEquationRelation) {
  const auto s = heat_setup();
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (int i = 0; i < 15; ++i) gk.step();
  const Index k = gk.k();
  const Matrix lhs = s.A.transpose() * s.A * s.Q * gk.V(k);
  const Matrix rhs = gk.V(k + 1) * gk.augmented();
  EXPECT_LE((lhs - rhs).norm() / lhs.norm(), 1e-10);
}

TEST(GenGK, AugmentedInterlacesSquaredSingularValues) {
  const auto s = heat_setup();
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (Index k : {5, 20, 35, 50}) {
    while (gk.k() < k) gk.step();
    const Vector sb = Eigen::JacobiSVD<Matrix>(gk.bidiagonal()).singularValues();
    const Vector sa = Eigen::JacobiSVD<Matrix>(gk.augmented()).singularValues();
    const Vector c = sb.array().square();
    const double slack = 1e-10 * sa[0];
    for (Index i = 0; i < k; ++i) {
      EXPECT_GE(sa[i], c[i] - slack) << "k=" << k << " i=" << i;
      if (i > 0) {
        EXPECT_LE(sa[i], c[i - 1] + slack) << "k=" << k << " i=" << i;
      }
    }
  }
}

TEST(GenGK, BasisSpansKrylovSpace) {
  const auto s = heat_setup(40);
  const Index k = 6;
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (Index i = 0; i < k; ++i) gk.step();
  const Matrix m = s.A.transpose() * s.A * s.Q;
  Matrix kry(40, k);
  Vector w = s.A.transpose() * s.b();
  for (Index j = 0; j < k; ++j) {
    kry.col(j) = w / w.norm();
    w = m * kry.col(j);
  }
  const Eigen::HouseholderQR<Matrix> qr(gk.V(k));
  const Matrix basis = qr.householderQ() * Matrix::Identity(40, k);
  const Matrix resid = kry - basis * (basis.transpose() * kry);
  EXPECT_LE(resid.colwise().norm().maxCoeff(), 1e-8);
}

TEST(GenGK, LeadingSingularValuesConvergeToGsvd) {
  const auto s = heat_setup();
  const auto f = reference::gsvd(s.A, s.Q, s.R);
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (int i = 0; i < 50; ++i) gk.step();
  const Vector sb = Eigen::JacobiSVD<Matrix>(gk.bidiagonal()).singularValues();
  for (Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(sb[i], f.sigma_hat[i], 1e-6 * f.sigma_hat[i]) << i;
  }
}

TEST(MakeBidiagonal, LowerBidiagonalLayout) {
  Vector a(3), b(3);
  a << 1, 2, 3;
  b << 9, 4, 5;
  const Matrix B = make_bidiagonal(a, b, 2);
  Matrix expect(3, 2);
  expect << 1, 0, 4, 2, 0, 5;
  EXPECT_EQ(B, expect);
}

}  // namespace
}  // namespace gkh
