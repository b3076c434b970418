// SPDX-License-Identifier: Apache-2.0
//
// Real-valued multi-user channel model: i.i.d. Gaussian channel sampling,
// line/subspace angles, zero-forcing beams and the chi-square law of the
// squared channel magnitude.

#pragma once

#include <span>
#include <vector>

#include "fbq/common.hpp"

namespace fbq {

/// A unit-norm vector in R^M (channel direction, codeword or beam).
class UnitDirection {
 public:
  /// Normalises `v`. Throws InvalidArgument for a zero or non-finite vector.
  static UnitDirection normalized(const Vector& v);

  /// Wraps `v`, which must already have unit norm within 1e-12.
  static UnitDirection from_unit(Vector v);

  const Vector& vector() const { return v_; }
  Eigen::Index dim() const { return v_.size(); }
  double dot(const UnitDirection& other) const { return v_.dot(other.v_); }

 private:
  explicit UnitDirection(Vector v) : v_(std::move(v)) {}
  Vector v_;
};

/// M user channels in R^M stored as the columns of a square matrix.
///
/// Construction checks the square shape, finiteness, M >= 2, and linear
/// independence (smallest singular value above 1e-9 times the largest).
class ChannelSet {
 public:
  explicit ChannelSet(Matrix columns);

  int num_users() const { return static_cast<int>(h_.cols()); }
  const Matrix& matrix() const { return h_; }
  Vector channel(int k) const { return h_.col(k); }
  /// Y_k = ||h_k||^2.
  double squared_magnitude(int k) const { return h_.col(k).squaredNorm(); }
  UnitDirection direction(int k) const;

 private:
  Matrix h_;
};

/// Draws M channels with i.i.d. N(0, 1) entries.
ChannelSet sample_channels(Rng& rng, int num_antennas);

/// Line angle arccos|u^T v| in [0, pi/2].
double angle_between(const UnitDirection& u, const UnitDirection& v);

/// Angle between `u` and span(others), in [0, pi/2]. Returns 0 when the
/// others already span R^M.
double angle_to_subspace(const UnitDirection& u,
                         std::span<const UnitDirection> others);

/// Zero-forcing beams for M linearly independent directions: v_k is unit
/// norm, orthogonal to every u_l (l != k), and v_k^T u_k > 0.
/// Throws DomainError("ZF undefined") for rank-deficient input.
std::vector<UnitDirection> zero_forcing_beams(
    std::span<const UnitDirection> directions);

/// Numerical rank test shared by the ZF and channel constructors.
bool has_full_rank(const Matrix& m);

/// Law of Y = ||h||^2 for h ~ N(0, I_M): chi-square with M degrees of
/// freedom, together with the constants that enter the magnitude codebook
/// bounds.
class MagnitudeDistribution {
 public:
  int degrees_of_freedom() const { return m_; }

  double cdf(double y) const;
  double pdf(double y) const;
  /// Bisection on the cdf to 1e-12 absolute over a geometrically grown
  /// bracket. Requires p in (0, 1).
  double inverse_cdf(double p) const;

  /// E[Y].
  double mean() const { return m_; }
  /// rho = E[1/Y].
  double rho() const { return 1.0 / (m_ - 2); }
  /// eta = lim_{y -> inf} -f(y) / f'(y).
  double eta() const { return 2.0; }
  /// omega = E[Y] / (eta^2 E[1/Y]).
  double omega() const { return mean() / (eta() * eta() * rho()); }

 private:
  friend MagnitudeDistribution chi_square_facts(int num_antennas);
  explicit MagnitudeDistribution(int m) : m_(m) {}
  int m_;
};

/// Throws DomainError("E[1/Y] diverges") when M < 3.
MagnitudeDistribution chi_square_facts(int num_antennas);

}  // namespace fbq
