// SPDX-License-Identifier: Apache-2.0

#include "fbq/lmi_solver.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace fbq::lmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Evaluation {
  bool feasible = false;
  double value = kInf;
  Vector grad;
  Matrix hess;
};

// Barrier objective t c^T z - sum log det F_j(z) - sum log g_l(z).
class BarrierFunction {
 public:
  explicit BarrierFunction(const Problem& p) : p_(p) {
    nonzero_.resize(p.blocks.size());
    for (std::size_t j = 0; j < p.blocks.size(); ++j) {
      for (const auto& a : p.blocks[j].coefficients) {
        nonzero_[j].push_back(!a.isZero(0.0));
      }
    }
  }

  int dimension() const {
    int d = static_cast<int>(p_.linear.size());
    for (const auto& b : p_.blocks) d += static_cast<int>(b.constant.rows());
    return d;
  }

  Evaluation operator()(const Vector& z, double t, bool derivatives) const {
    const int n = p_.num_variables;
    Evaluation e;
    e.value = t * p_.objective.dot(z);
    if (derivatives) {
      e.grad = t * p_.objective;
      e.hess = Matrix::Zero(n, n);
    }
    for (std::size_t j = 0; j < p_.blocks.size(); ++j) {
      const auto& blk = p_.blocks[j];
      const Matrix f = blk.evaluate(z);
      Eigen::LLT<Matrix> llt(f);
      if (llt.info() != Eigen::Success) return Evaluation{};
      const Matrix l = llt.matrixL();
      const Vector d = l.diagonal();
      if ((d.array() <= 0.0).any()) return Evaluation{};
      e.value -= 2.0 * d.array().log().sum();
      if (!derivatives) continue;
      std::vector<Matrix> scaled(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        if (!nonzero_[j][static_cast<std::size_t>(i)]) continue;
        // B_i = L^-1 A_i L^-T
        Matrix tmp = llt.matrixL().solve(blk.coefficients[static_cast<std::size_t>(i)]);
        scaled[static_cast<std::size_t>(i)] =
            llt.matrixL().solve(tmp.transpose()).transpose();
        e.grad(i) -= scaled[static_cast<std::size_t>(i)].trace();
      }
      for (int i = 0; i < n; ++i) {
        if (!nonzero_[j][static_cast<std::size_t>(i)]) continue;
        for (int k = i; k < n; ++k) {
          if (!nonzero_[j][static_cast<std::size_t>(k)]) continue;
          const double h = scaled[static_cast<std::size_t>(i)]
                               .cwiseProduct(scaled[static_cast<std::size_t>(k)])
                               .sum();
          e.hess(i, k) += h;
          if (k != i) e.hess(k, i) += h;
        }
      }
    }
    for (const auto& lin : p_.linear) {
      const double g = lin.evaluate(z);
      if (!(g > 0.0)) return Evaluation{};
      e.value -= std::log(g);
      if (derivatives) {
        e.grad -= lin.a / g;
        e.hess += (lin.a * lin.a.transpose()) / (g * g);
      }
    }
    e.feasible = std::isfinite(e.value);
    return e;
  }

 private:
  const Problem& p_;
  std::vector<std::vector<bool>> nonzero_;
};

// Damped Newton centering. Returns false on a numerical breakdown. `done`, if
// given, is checked after every accepted step and ends centering early.
bool center(const BarrierFunction& f, Vector& z, double t, const Options& opt, int& steps,
            const std::function<bool(const Vector&)>& done = {}) {
  for (int it = 0; it < opt.max_newton_steps; ++it) {
    Evaluation e = f(z, t, true);
    if (!e.feasible) return false;
    const double reg = 1e-14 * (1.0 + e.hess.diagonal().cwiseAbs().maxCoeff());
    e.hess.diagonal().array() += reg;
    const Vector dz = -e.hess.ldlt().solve(e.grad);
    if (!dz.allFinite()) return false;
    const double decrement = -e.grad.dot(dz);
    ++steps;
    if (decrement < 2e-10) return true;
    double alpha = 1.0;
    while (true) {
      const Vector trial = z + alpha * dz;
      const Evaluation et = f(trial, t, false);
      if (et.feasible && et.value <= e.value - 0.25 * alpha * decrement) {
        z = trial;
        break;
      }
      alpha *= 0.5;
      if (alpha < 1e-14) return true;  // no further progress at this t
    }
    if (done && done(z)) return true;
  }
  return true;
}

void fill_certificate(const Problem& p, Result& r) {
  r.block_min_eigenvalues.clear();
  for (const auto& b : p.blocks) {
    r.block_min_eigenvalues.push_back(min_eigenvalue(b.evaluate(r.x)));
  }
  r.min_linear_slack = kInf;
  for (const auto& lin : p.linear) {
    r.min_linear_slack = std::min(r.min_linear_slack, lin.evaluate(r.x));
  }
  r.objective = p.objective.dot(r.x);
}

bool strictly_feasible(const Problem& p, const Vector& x) {
  for (const auto& b : p.blocks) {
    Eigen::LLT<Matrix> llt(b.evaluate(x));
    if (llt.info() != Eigen::Success) return false;
    if ((Matrix(llt.matrixL()).diagonal().array() <= 0.0).any()) return false;
  }
  for (const auto& lin : p.linear) {
    if (!(lin.evaluate(x) > 0.0)) return false;
  }
  return true;
}

}  // namespace

Matrix MatrixInequality::evaluate(const Vector& x) const {
  Matrix f = constant;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    const double xi = x(static_cast<Eigen::Index>(i));
    if (xi != 0.0) f += xi * coefficients[i];
  }
  return 0.5 * (f + f.transpose());
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Result find_strictly_feasible(const Problem& problem, const Options& options) {
  const int n = problem.num_variables;
  Result result;
  result.x = Vector::Zero(n);
  if (strictly_feasible(problem, result.x)) {
    result.status = Status::Optimal;
    fill_certificate(problem, result);
    return result;
  }

  // Augmented problem over (x, s): F_j(x) + s I >= 0, g_l(x) + s >= 0, box.
  Problem aug;
  aug.num_variables = n + 1;
  aug.objective = Vector::Zero(n + 1);
  aug.objective(n) = 1.0;
  double s0 = 0.0;
  for (const auto& b : problem.blocks) {
    MatrixInequality blk;
    blk.constant = b.constant;
    blk.coefficients = b.coefficients;
    blk.coefficients.resize(static_cast<std::size_t>(n),
                            Matrix::Zero(b.constant.rows(), b.constant.cols()));
    blk.coefficients.push_back(Matrix::Identity(b.constant.rows(), b.constant.cols()));
    s0 = std::max(s0, -min_eigenvalue(b.evaluate(result.x)));
    aug.blocks.push_back(std::move(blk));
  }
  for (const auto& lin : problem.linear) {
    LinearInequality l;
    l.a = Vector::Zero(n + 1);
    l.a.head(n) = lin.a;
    l.a(n) = 1.0;
    l.b = lin.b;
    s0 = std::max(s0, -lin.evaluate(result.x));
    aug.linear.push_back(std::move(l));
  }
  for (int i = 0; i < n; ++i) {
    for (double sign : {1.0, -1.0}) {
      LinearInequality l;
      l.a = Vector::Zero(n + 1);
      l.a(i) = -sign;
      l.b = problem.phase_one_bound;
      aug.linear.push_back(std::move(l));
    }
  }
  Vector z = Vector::Zero(n + 1);
  z(n) = 1.0 + 1.1 * s0;

  const BarrierFunction f(aug);
  const double m = f.dimension();
  double t = 1.0 / (1.0 + z(n));
  // Stop at the first strictly feasible iterate: running phase I to
  // completion drives x out to the box, a badly scaled start for phase II.
  const auto found = [&](const Vector& zz) {
    return zz(n) < 0.0 && strictly_feasible(problem, zz.head(n));
  };
  for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
    if (!center(f, z, t, options, result.newton_steps, found)) break;
    const Vector x = z.head(n);
    if (z(n) < 0.0 && strictly_feasible(problem, x)) {
      result.x = x;
      result.status = Status::Optimal;
      fill_certificate(problem, result);
      return result;
    }
    // s is within m/t of its infimum; a positive lower bound proves
    // infeasibility, and a converged s >= 0 is treated the same way.
    if (z(n) - m / t > 0.0 || m / t < 1e-12 * (1.0 + std::abs(z(n)))) {
      result.x = x;
      result.status = Status::Infeasible;
      fill_certificate(problem, result);
      return result;
    }
    t *= options.barrier_growth;
  }
  result.x = z.head(n);
  result.status = Status::Infeasible;
  fill_certificate(problem, result);
  return result;
}

Result solve(const Problem& problem, const Options& options) {
  Result start = find_strictly_feasible(problem, options);
  if (start.status != Status::Optimal) return start;

  Result result;
  result.newton_steps = start.newton_steps;
  Vector z = start.x;
  const BarrierFunction f(problem);
  const double m = f.dimension();
  double t = m / std::max(1e-6, std::abs(problem.objective.dot(z)));
  bool ok = true;
  for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
    if (!center(f, z, t, options, result.newton_steps)) {
      ok = false;
      break;
    }
    const double obj = problem.objective.dot(z);
    if (m / t <= options.relative_gap * (1.0 + std::abs(obj))) break;
    t *= options.barrier_growth;
  }
  result.x = z;
  result.status = ok && strictly_feasible(problem, z) ? Status::Optimal
                                                       : Status::NumericalFailure;
  fill_certificate(problem, result);
  return result;
}

}  // namespace fbq::lmi
