// SPDX-License-Identifier: Apache-2.0

#include "fbq/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

namespace fbq {

namespace {

constexpr double kRankTolerance = 1e-9;

Matrix stack_columns(std::span<const UnitDirection> dirs) {
  Matrix m(dirs.front().dim(), static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = dirs[i].vector();
  }
  return m;
}

}  // namespace

UnitDirection UnitDirection::normalized(const Vector& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw InvalidArgument("cannot normalise a zero or non-finite vector");
  }
  return UnitDirection(v / n);
}

UnitDirection UnitDirection::from_unit(Vector v) {
  if (std::abs(v.norm() - 1.0) > 1e-12) {
    throw InvalidArgument("vector is not unit norm");
  }
  return UnitDirection(std::move(v));
}

bool has_full_rank(const Matrix& m) {
  if (m.size() == 0) return false;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > kRankTolerance * s(0);
}

ChannelSet::ChannelSet(Matrix columns) : h_(std::move(columns)) {
  if (h_.rows() != h_.cols()) {
    throw InvalidArgument("channel set must hold M channels of dimension M");
  }
  if (h_.cols() < 2) throw InvalidArgument("need M >= 2 antennas");
  if (!h_.allFinite()) throw InvalidArgument("channel entries must be finite");
  if (!has_full_rank(h_)) {
    throw DomainError("channels are linearly dependent");
  }
}

UnitDirection ChannelSet::direction(int k) const {
  return UnitDirection::normalized(h_.col(k));
}

ChannelSet sample_channels(Rng& rng, int num_antennas) {
  if (num_antennas < 2) throw InvalidArgument("need M >= 2 antennas");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix h(num_antennas, num_antennas);
  // Column-major fill: user k's entries are drawn consecutively.
  for (Eigen::Index k = 0; k < h.cols(); ++k) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, k) = normal(rng);
  }
  return ChannelSet(std::move(h));
}

double angle_between(const UnitDirection& u, const UnitDirection& v) {
  return std::acos(std::min(1.0, std::abs(u.dot(v))));
}

double angle_to_subspace(const UnitDirection& u,
                         std::span<const UnitDirection> others) {
  if (others.empty()) return kPi / 2;
  const Matrix a = stack_columns(others);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > kRankTolerance * s(0)) ++rank;
  }
  if (rank >= u.dim()) return 0.0;
  const Matrix basis = svd.matrixU().leftCols(rank);
  const Vector residual = u.vector() - basis * (basis.transpose() * u.vector());
  return std::asin(std::min(1.0, residual.norm()));
}

std::vector<UnitDirection> zero_forcing_beams(
    std::span<const UnitDirection> directions) {
  if (directions.empty()) return {};
  const Matrix u = stack_columns(directions);
  if (u.rows() != u.cols() || !has_full_rank(u)) {
    throw DomainError("ZF undefined: directions are not linearly independent");
  }
  // Columns of pinv(U^T) satisfy u_l^T w_k = delta_lk, so w_k^T u_k > 0 holds
  // after normalisation.
  const Matrix w = u.transpose().completeOrthogonalDecomposition().pseudoInverse();
  std::vector<UnitDirection> beams;
  beams.reserve(directions.size());
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    beams.push_back(UnitDirection::normalized(w.col(k)));
  }
  return beams;
}

double MagnitudeDistribution::cdf(double y) const {
  if (y <= 0.0) return 0.0;
  if (std::isinf(y)) return 1.0;
  return boost::math::gamma_p(0.5 * m_, 0.5 * y);
}

double MagnitudeDistribution::pdf(double y) const {
  if (y <= 0.0) return 0.0;
  const double k = 0.5 * m_;
  return std::exp((k - 1.0) * std::log(y) - 0.5 * y - k * std::log(2.0) -
                  std::lgamma(k));
}

double MagnitudeDistribution::inverse_cdf(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidArgument("inverse_cdf requires p in (0, 1)");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

MagnitudeDistribution chi_square_facts(int num_antennas) {
  if (num_antennas < 3) {
    throw DomainError("E[1/Y] diverges for M < 3");
  }
  return MagnitudeDistribution(num_antennas);
}

}  // namespace fbq
