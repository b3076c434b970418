// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "fbq/lmi_solver.hpp"

namespace fbq::lmi {
namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(Lmi, ScalarSchurComplement) {
  // [[x, 1], [1, 1]] >= 0  <=>  x >= 1.
  Problem p;
  p.num_variables = 1;
  p.objective = Vector::Ones(1);
  p.blocks.push_back({m2(0, 1, 1, 1), {m2(1, 0, 0, 0)}});
  const Result r = solve(p);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-6);
  EXPECT_GE(r.block_min_eigenvalues[0], 0.0);
}

TEST(Lmi, HyperbolicConstraint) {
  // x1 x2 >= 1 with x >= 0: min x1 + x2 = 2.
  Problem p;
  p.num_variables = 2;
  p.objective = Vector::Ones(2);
  p.blocks.push_back({m2(0, 1, 1, 0), {m2(1, 0, 0, 0), m2(0, 0, 0, 1)}});
  const Result r = solve(p);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_NEAR(r.objective, 2.0, 1e-6);
  EXPECT_NEAR(r.x(0), 1.0, 1e-3);
  EXPECT_NEAR(r.x(1), 1.0, 1e-3);
}

TEST(Lmi, LinearOnly) {
  Problem p;
  p.num_variables = 2;
  p.objective = Vector::Ones(2);
  Vector a(2);
  a << 1, 0;
  p.linear.push_back({a, -3.0});
  a << 0, 1;
  p.linear.push_back({a, 0.5});
  a << 1, 1;
  p.linear.push_back({a, -4.0});
  const Result r = solve(p);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_NEAR(r.objective, 4.0, 1e-6);
  EXPECT_GT(r.min_linear_slack, 0.0);
}

TEST(Lmi, LargestEigenvalueOracle) {
  Rng rng(1);
  std::normal_distribution<double> n;
  for (int t = 0; t < 20; ++t) {
    const int d = 2 + t % 6;
    Matrix a(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) a(i, j) = n(rng);
    }
    a = 0.5 * (a + a.transpose()).eval();
    // min s  s.t.  s I - A >= 0.
    Problem p;
    p.num_variables = 1;
    p.objective = Vector::Ones(1);
    p.blocks.push_back({-a, {Matrix::Identity(d, d)}});
    const Result r = solve(p);
    ASSERT_EQ(r.status, Status::Optimal);
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().maxCoeff();
    EXPECT_NEAR(r.objective, lmax, 1e-6 * (1 + std::abs(lmax)));
    EXPECT_NEAR(min_eigenvalue(-a), -lmax, 1e-12);
  }
}

TEST(Lmi, InfeasibleBlock) {
  Problem p;
  p.num_variables = 1;
  p.objective = Vector::Ones(1);
  p.blocks.push_back({m2(-1, 0, 0, 1), {m2(0, 0, 0, 1)}});
  EXPECT_EQ(find_strictly_feasible(p).status, Status::Infeasible);
  EXPECT_EQ(solve(p).status, Status::Infeasible);
}

TEST(Lmi, InfeasibleLinear) {
  Problem p;
  p.num_variables = 1;
  p.objective = Vector::Ones(1);
  p.linear.push_back({Vector::Ones(1), -1.0});
  p.linear.push_back({-Vector::Ones(1), 0.5});
  EXPECT_EQ(solve(p).status, Status::Infeasible);
}

TEST(Lmi, StrictlyFeasiblePoint) {
  Problem p;
  p.num_variables = 2;
  p.objective = Vector::Zero(2);
  p.blocks.push_back({m2(-5, 1, 1, -5), {m2(1, 0, 0, 0), m2(0, 0, 0, 1)}});
  const Result r = find_strictly_feasible(p);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_GT(min_eigenvalue(p.blocks[0].evaluate(r.x)), 0.0);
}

}  // namespace
}  // namespace fbq::lmi
