#include "gkhybrid/projected.hpp"
#include "gkhybrid/reference.hpp"
#include "test_support.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>

namespace gkh {
namespace {

using test::heat_setup;

Matrix two_by_one(double a1, double b2) {
  Matrix m(2, 1);
  m << a1, b2;
  return m;
}

Matrix random_bidiagonal(Index k, std::uint64_t seed) {
  const Vector a = test::gaussian_vector(k + 1, seed).cwiseAbs();
  const Vector b = test::gaussian_vector(k + 1, seed + 1).cwiseAbs();
  return make_bidiagonal(a, b, k);
}

TEST(Projected, FirstStepSingularValue) {
  const ProjectedProblem pp(Variant::lsqr, two_by_one(3.0, 4.0), 1.0);
  EXPECT_NEAR(pp.singular_values()[0], 5.0, 1e-14);
  EXPECT_EQ(pp.k(), 1);
}

TEST(Projected, SvdReconstructsMatrix) {
  const Matrix m = random_bidiagonal(12, 3);
  const ProjectedProblem pp(Variant::lsqr, m, 2.0);
  Matrix sigma = Matrix::Zero(13, 12);
  sigma.diagonal() = pp.singular_values();
  const Matrix rebuilt = pp.left_vectors() * sigma * pp.right_vectors().transpose();
  EXPECT_LE((rebuilt - m).norm() / m.norm(), 1e-12);
  for (Index i = 1; i < 12; ++i) EXPECT_GE(pp.singular_values()[i - 1], pp.singular_values()[i]);
}

TEST(Projected, ScalarSolves) {
  EXPECT_NEAR(ProjectedProblem(Variant::lsqr, two_by_one(1.0, 0.0), 1.0).solve(0.0).z[0], 1.0, 1e-15);
  const ProjectedSolution sol = ProjectedProblem(Variant::lsqr, two_by_one(1.0, 1.0), 1.0).solve(1.0);
  EXPECT_NEAR(sol.z[0], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(sol.lambda, 1.0);
}

TEST(Projected, FullDampingLimit) {
  const ProjectedProblem pp(Variant::lsqr, random_bidiagonal(6, 5), 0.7);
  const ProjectedSolution sol = pp.solve(1e12);
  EXPECT_LE(sol.z.norm(), 1e-20);
  EXPECT_NEAR(sol.residual_norm, 0.7, 1e-12);
}

TEST(Projected, SolutionSatisfiesNormalEquations) {
  for (Variant v : {Variant::lsqr, Variant::lsmr}) {
    const Matrix m = test::gaussian_matrix(9, 8, 7);
    const ProjectedProblem pp(v, m, 1.3);
    const Vector rhs = 1.3 * Vector::Unit(9, 0);
    for (double lambda : {0.0, 0.01, 0.3, 2.0}) {
      const ProjectedSolution sol = pp.solve(lambda);
      const Vector lhs = (m.transpose() * m + lambda * lambda * Matrix::Identity(8, 8)) * sol.z;
      const Vector target = m.transpose() * rhs;
      EXPECT_LE((lhs - target).norm(), 1e-10 * target.norm()) << lambda;
      EXPECT_NEAR(sol.residual_norm, (m * sol.z - rhs).norm(), 1e-12);
      EXPECT_NEAR(sol.residual_norm * sol.residual_norm, pp.residual_squared(lambda), 1e-12);
      EXPECT_NEAR(sol.solution_seminorm, sol.z.norm(), 1e-12);
    }
  }
}

TEST(Projected, MinimumNormOnNullDirections) {
  Matrix m = Matrix::Zero(3, 2);
  m(0, 0) = 2.0;  // second column is zero
  const ProjectedProblem pp(Variant::lsqr, m, 4.0);
  const ProjectedSolution sol = pp.solve(0.0);
  EXPECT_NEAR(sol.z[0], 2.0, 1e-15);
  EXPECT_EQ(sol.z[1], 0.0);
  EXPECT_EQ(pp.filter(0.0)[1], 0.0);
  EXPECT_THROW(pp.solve(-1.0), std::invalid_argument);
}

TEST(Projected, MonotoneInLambda) {
  const ProjectedProblem pp(Variant::lsqr, random_bidiagonal(15, 11), 1.0);
  double prev_res = -1.0;
  double prev_norm = std::numeric_limits<double>::infinity();
  for (double e = -8.0; e <= 4.0; e += 0.1) {
    const ProjectedSolution sol = pp.solve(std::pow(10.0, e));
    EXPECT_GE(sol.residual_norm, prev_res - 1e-14);
    EXPECT_LE(sol.solution_seminorm, prev_norm * (1.0 + 1e-14));
    prev_res = sol.residual_norm;
    prev_norm = sol.solution_seminorm;
  }
}

TEST(Projected, FilterTrace) {
  const ProjectedProblem pp(Variant::lsqr, random_bidiagonal(5, 13), 1.0);
  const double lambda = 0.4;
  const Vector s = pp.singular_values();
  double expect = 0.0;
  for (Index i = 0; i < s.size(); ++i) expect += s[i] * s[i] / (s[i] * s[i] + lambda * lambda);
  EXPECT_NEAR(pp.filter_trace(lambda), expect, 1e-14);
}

TEST(Projected, BuildFromBidiagonalization) {
  const auto s = heat_setup();
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (int i = 0; i < 8; ++i) gk.step();
  const ProjectedProblem lsqr = build_projected(gk, Variant::lsqr);
  const ProjectedProblem lsmr = build_projected(gk, Variant::lsmr);
  EXPECT_EQ(lsqr.matrix(), gk.bidiagonal());
  EXPECT_EQ(lsmr.matrix(), gk.augmented());
  EXPECT_EQ(lsqr.rhs_scale(), gk.beta(1));
  EXPECT_EQ(lsmr.rhs_scale(), gk.alpha(1) * gk.beta(1));
}

TEST(Projected, RecoverSolutionBasics) {
  const auto s = heat_setup(32);
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (int i = 0; i < 5; ++i) gk.step();
  const Vector mu = Vector::Constant(32, 0.3);
  EXPECT_EQ(recover_solution(gk, Vector::Zero(5), mu), mu);
  const Vector z = test::gaussian_vector(5, 3);
  EXPECT_LE((recover_solution(gk, z, mu) - mu - s.Q * gk.V(5) * z).norm(), 1e-12);

  auto id = std::make_shared<IdentityOperator>(32);
  GenGK plain(s.a_op, s.noise, id, s.b());
  for (int i = 0; i < 5; ++i) plain.step();
  EXPECT_LE((recover_solution(plain, z, Vector::Zero(32)) - plain.V(5) * z).norm(), 1e-14);
  EXPECT_THROW(recover_solution(plain, Vector::Zero(4), Vector::Zero(32)), std::invalid_argument);
}

TEST(Projected, FullBasisMatchesDenseMap) {
  const auto s = heat_setup();
  const Index n = s.A.cols();
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  while (gk.k() < n && !gk.broken_down()) gk.step();
  const double lambda = 0.05;
  const Vector sk = recover_solution(gk, build_projected(gk, Variant::lsqr).solve(lambda).z, s.mu);
  const Vector map = reference::map_estimate(s.A, s.Q, s.R, s.d, s.mu, lambda);
  EXPECT_LE(test::rel_diff(sk, map), 1e-6);
}

// argmin over x = V y of ||G y - h||_Q^2 + lambda^2 ||V y||_Q^2.
Vector subspace_minimizer(const Matrix& g, const Vector& h, const Matrix& q, const Matrix& v,
                          double lambda) {
  const Matrix lhs = g.transpose() * q * g + lambda * lambda * v.transpose() * q * v;
  const Vector y = lhs.ldlt().solve(g.transpose() * q * h);
  return v * y;
}

TEST(Projected, LsqrOptimalOverSubspace) {
  const auto s = heat_setup(48);
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (int i = 0; i < 6; ++i) gk.step();
  const double lambda = 0.02;
  const Matrix v = gk.V(6);
  const Vector xk = v * build_projected(gk, Variant::lsqr).solve(lambda).z;
  // 1/2 ||A Q x - b||^2 + lambda^2/2 ||x||_Q^2 with x = V y (R = I).
  const Matrix aqv = s.A * s.Q * v;
  const Matrix lhs = aqv.transpose() * aqv + lambda * lambda * v.transpose() * s.Q * v;
  const Vector y = lhs.ldlt().solve(aqv.transpose() * s.b());
  EXPECT_LE(test::rel_diff(xk, Vector(v * y)), 1e-8);
}

TEST(Projected, LsmrOptimalOverSubspace) {
  const auto s = heat_setup(48);
  GenGK gk(s.a_op, s.noise, s.q_op, s.b());
  for (int i = 0; i < 6; ++i) gk.step();
  const double lambda = 0.02;
  const Matrix v = gk.V(6);
  const Vector xk = v * build_projected(gk, Variant::lsmr).solve(lambda).z;
  const Matrix g = s.A.transpose() * s.A * s.Q * v;
  const Vector h = s.A.transpose() * s.b();
  EXPECT_LE(test::rel_diff(xk, subspace_minimizer(g, h, s.Q, v, lambda)), 1e-6);
}

}  // namespace
}  // namespace gkh
