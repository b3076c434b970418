// SPDX-License-Identifier: Apache-2.0
//
// Uniform-in-dB quantizer for the squared channel magnitude Y = ||h||^2.

#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "fbq/channel_model.hpp"

namespace fbq {

/// Ladder of levels y(1) < ... < y(N). The interval [0, y(1)) is the
/// magnitude outage region; level n owns [y(n), y(n+1)) with y(N+1) = inf.
class MagnitudeCodebook {
 public:
  MagnitudeCodebook(std::vector<double> levels, double zeta);

  std::size_t size() const { return levels_.size(); }
  const std::vector<double>& levels() const { return levels_; }
  double level(std::size_t n) const { return levels_.at(n); }
  double outage_threshold() const { return levels_.front(); }
  /// zeta(N) of the codebook; the level ratio is 1 + N^-zeta.
  double zeta() const { return zeta_; }

 private:
  std::vector<double> levels_;
  double zeta_;
};

/// Solves n^-z (1 + n^-z)^(n-1) = eta / y1 for z in (0, 8] by bisection.
/// The left side is strictly decreasing in z. `n` is a real so that very
/// large codebooks (2^60) can be probed.
/// Throws DomainError("zeta out of range") when the root is outside (0, 8].
double solve_zeta(double n, double y1, double eta);

/// Residual of the zeta equation, used by tests and diagnostics.
double zeta_residual(double n, double y1, double eta, double zeta);

/// Uniform-dB codebook: y(1) = F^-1(q_dot), y(n+1) = y(n) (1 + N^-zeta(N)).
MagnitudeCodebook build_uniform_db(std::size_t size, double q_dot,
                                   const MagnitudeDistribution& dist);

struct MagnitudeQuantization {
  /// Zero-based level index; empty for magnitude outage.
  std::optional<std::size_t> index;
  /// Quantized magnitude (0 in outage).
  double value = 0.0;

  bool outage() const { return !index.has_value(); }
};

/// Left-level rule: Y in [y(n), y(n+1)) maps to y(n). Requires Y >= 0.
MagnitudeQuantization quantize_magnitude(double squared_magnitude,
                                         const MagnitudeCodebook& cb);

/// E[1/Y~ ; no outage] = sum_n (1/y(n)) (F(y(n+1)) - F(y(n))); outage
/// contributes zero.
double expected_inverse_quantized(const MagnitudeCodebook& cb,
                                  const MagnitudeDistribution& dist);

/// rho (1 + N^-zeta + omega N^-2zeta).
double expected_inverse_bound(const MagnitudeCodebook& cb,
                              const MagnitudeDistribution& dist);

/// Plain-text table: one level per line at 17 significant digits.
void write_levels(std::ostream& os, const MagnitudeCodebook& cb);
/// Reads a level table; zeta is recovered from the level ratio.
MagnitudeCodebook read_levels(std::istream& is);

}  // namespace fbq
