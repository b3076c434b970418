// SPDX-License-Identifier: Apache-2.0
//
// Small dense primal barrier method for linear objectives under block linear
// matrix inequalities and scalar linear inequalities:
//
//   minimize    c^T x
//   subject to  F_j(x) = A_j0 + sum_i x_i A_ji  >= 0   (PSD, each block)
//               a_l^T x + b_l >= 0
//
// Intended for desk-scale problems (tens of variables, blocks up to ~8x8).
// Feasibility is certified post hoc from the block eigenvalues.

#pragma once

#include <vector>

#include "fbq/common.hpp"

namespace fbq::lmi {

struct MatrixInequality {
  Matrix constant;                   ///< A_j0 (symmetric)
  std::vector<Matrix> coefficients;  ///< A_ji, one per variable (symmetric)

  Matrix evaluate(const Vector& x) const;
};

struct LinearInequality {
  Vector a;
  double b = 0.0;

  double evaluate(const Vector& x) const { return a.dot(x) + b; }
};

struct Problem {
  int num_variables = 0;
  Vector objective;
  std::vector<MatrixInequality> blocks;
  std::vector<LinearInequality> linear;
  /// Box |x_i| <= bound applied during the feasibility phase only, keeping
  /// that phase bounded for homogeneous constraint sets.
  double phase_one_bound = 1e7;
};

struct Options {
  double relative_gap = 1e-7;   ///< stop when barrier gap <= gap (1 + |c^T x|)
  double barrier_growth = 10.0;
  int max_newton_steps = 200;   ///< per centering
  int max_outer_iterations = 60;
};

enum class Status { Optimal, Infeasible, NumericalFailure };

struct Result {
  Status status = Status::NumericalFailure;
  Vector x;
  double objective = 0.0;
  /// Smallest eigenvalue of each block at x.
  std::vector<double> block_min_eigenvalues;
  double min_linear_slack = 0.0;
  int newton_steps = 0;
};

/// Finds a strictly feasible point (phase I only). Status is Optimal when
/// one exists, Infeasible otherwise.
Result find_strictly_feasible(const Problem& problem, const Options& options = {});

/// Full solve: phase I followed by the barrier path.
Result solve(const Problem& problem, const Options& options = {});

double min_eigenvalue(const Matrix& symmetric);

}  // namespace fbq::lmi
