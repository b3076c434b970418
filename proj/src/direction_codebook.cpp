// SPDX-License-Identifier: Apache-2.0

#include "fbq/direction_codebook.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace fbq {

namespace {

double max_offdiag_abs(const Matrix& gram) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < gram.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) m = std::max(m, std::abs(gram(i, j)));
  }
  return m;
}

Matrix random_unit_rows(std::size_t n, int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix u(static_cast<Eigen::Index>(n), dim);
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    do {
      for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) = normal(rng);
    } while (u.row(i).norm() < 1e-8);
    u.row(i).normalize();
  }
  return u;
}

// One restart of the repulsion descent. Returns the best configuration seen.
Matrix pack_once(std::size_t n, int dim, Rng& rng, int iterations) {
  Matrix u = random_unit_rows(n, dim, rng);
  if (n < 2) return u;
  Matrix best = u;
  double best_coh = 2.0;

  const double spacing = std::pow(static_cast<double>(n), -1.0 / (dim - 1));
  const double step0 = 0.25 * std::min(1.0, spacing);
  Matrix gram(u.rows(), u.rows());
  Matrix grad(u.rows(), u.cols());
  for (int it = 0; it <= iterations; ++it) {
    gram.noalias() = u * u.transpose();
    double coh = 0.0;
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
      for (Eigen::Index i = 0; i < gram.rows(); ++i) {
        if (i == j) {
          gram(i, j) = 0.0;
          continue;
        }
        const double c = gram(i, j);
        coh = std::max(coh, std::abs(c));
        gram(i, j) = 2.0 * c / std::max(1.0 - c * c, 1e-12);
      }
    }
    if (coh < best_coh) {
      best_coh = coh;
      best = u;
    }
    if (it == iterations) break;
    // Gradient of the energy w.r.t. row i is sum_j w_ij u_j; project onto the
    // tangent space of the sphere.
    grad.noalias() = gram * u;
    for (Eigen::Index i = 0; i < grad.rows(); ++i) {
      grad.row(i) -= grad.row(i).dot(u.row(i)) * u.row(i);
    }
    const double gmax = grad.rowwise().norm().maxCoeff();
    if (!(gmax > 0.0)) break;
    const double frac = static_cast<double>(it) / std::max(1, iterations - 1);
    const double step = step0 * std::pow(1e-3, frac);
    u -= (step / gmax) * grad;
    u.rowwise().normalize();
  }
  return best;
}

}  // namespace

DirectionCodebook::DirectionCodebook(Matrix rows) : u_(std::move(rows)) {
  if (u_.rows() < 1 || u_.cols() < 2) {
    throw InvalidArgument("direction codebook needs codewords of dimension >= 2");
  }
  for (Eigen::Index i = 0; i < u_.rows(); ++i) {
    if (std::abs(u_.row(i).norm() - 1.0) > 1e-12) {
      throw InvalidArgument("direction codewords must be unit norm");
    }
  }
  delta_ = u_.rows() < 2 ? 1.0 : fbq::min_chordal_distance(u_);
}

DirectionCodebook DirectionCodebook::normalize_rows(Matrix rows) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double n = rows.row(i).norm();
    if (!(n > 0.0)) throw InvalidArgument("zero codeword");
    rows.row(i) /= n;
  }
  return DirectionCodebook(std::move(rows));
}

UnitDirection DirectionCodebook::codeword(std::size_t i) const {
  return UnitDirection::normalized(u_.row(static_cast<Eigen::Index>(i)).transpose());
}

double min_chordal_distance(const Matrix& unit_rows) {
  const double c = std::min(1.0, max_offdiag_abs(unit_rows * unit_rows.transpose()));
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

double lambda_m(int num_antennas) {
  if (num_antennas < 2) throw InvalidArgument("lambda_M requires M >= 2");
  const double m = num_antennas;
  const double log_base = 0.5 * std::log(kPi) + std::lgamma(0.5 * (m + 1.0)) -
                          std::lgamma(0.5 * m);
  return std::exp(log_base / (m - 1.0));
}

DirectionCodebook build_grassmannian(std::size_t size, int num_antennas,
                                     Rng& rng, PackingOptions options) {
  if (size < 2) throw InvalidArgument("direction codebook size must be >= 2");
  if (num_antennas < 2) throw InvalidArgument("need M >= 2 antennas");
  const std::uint64_t base = rng();
  Matrix best;
  double best_delta = -1.0;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Rng local(derive_seed(base, 0x6772617373ULL, static_cast<std::uint64_t>(r)));
    Matrix u = pack_once(size, num_antennas, local, options.iterations);
    const double d = min_chordal_distance(u);
    if (d > best_delta) {
      best_delta = d;
      best = std::move(u);
    }
  }
  return DirectionCodebook(std::move(best));
}

std::size_t quantize_direction(const Vector& h, const DirectionCodebook& cb) {
  if (h.size() != cb.dim()) throw InvalidArgument("dimension mismatch");
  if (!(h.norm() > 0.0)) throw InvalidArgument("cannot quantize a zero channel");
  const Vector proj = (cb.codewords() * h).cwiseAbs();
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < proj.size(); ++i) {
    if (proj(i) > proj(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

Matrix haar_orthogonal(int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(dim, dim);
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Sign correction makes the distribution exactly Haar.
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

DirectionCodebook random_rotation(const DirectionCodebook& cb, Rng& rng) {
  const Matrix q = haar_orthogonal(cb.dim(), rng);
  Matrix rotated = cb.codewords() * q.transpose();
  rotated.rowwise().normalize();
  return DirectionCodebook(std::move(rotated), cb.min_chordal_distance());
}

double verify_cap_bound(const DirectionCodebook& cb) {
  const int m = cb.dim();
  const double bound = 4.0 * lambda_m(m) *
                       std::pow(static_cast<double>(cb.size()), -1.0 / (m - 1));
  return bound - cb.min_chordal_distance();
}

void write_codebook(std::ostream& os, const DirectionCodebook& cb) {
  const auto old = os.precision(17);
  const Matrix& u = cb.codewords();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      if (j) os << ' ';
      os << u(i, j);
    }
    os << '\n';
  }
  os.precision(old);
}

DirectionCodebook read_codebook(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v = 0.0;
    while (ls >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("empty codebook file");
  const auto dim = rows.front().size();
  Matrix u(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) throw InvalidArgument("ragged codebook file");
    for (std::size_t j = 0; j < dim; ++j) {
      u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return DirectionCodebook::normalize_rows(std::move(u));
}

}  // namespace fbq
