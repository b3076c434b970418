// SPDX-License-Identifier: Apache-2.0
//
// Splitting a feedback budget of B bits across users and across the
// magnitude and direction codebooks of each user. All logarithms are base 2.

#pragma once

#include <vector>

#include "fbq/channel_model.hpp"

namespace fbq {

/// Per-user SINR targets (linear) and outage probabilities.
struct QosTargets {
  std::vector<double> gammas;
  std::vector<double> qs;

  /// Throws InvalidArgument unless sizes match, gamma > 0 and q in (0, 1).
  void validate() const;
  std::size_t num_users() const { return gammas.size(); }
  double gamma_geomean() const;
  double q_geomean() const;
  /// theta0_k = (pi/4) q_k.
  std::vector<double> theta0s() const;

  static QosTargets from_db(const std::vector<double>& gammas_db, std::vector<double> qs);
};

enum class Rounding { None, Nearest, NearestWithRepair };

struct BitAllocation {
  std::vector<double> magnitude_bits;  ///< B-dot_k
  std::vector<double> direction_bits;  ///< B-ddot_k
  std::vector<double> total_bits;      ///< B_k
  double kappa = 0.0;
  double mean_magnitude_bits = 0.0;  ///< B-dot bar (closed form only)
  double mean_direction_bits = 0.0;  ///< B-ddot bar (closed form only)
  double budget = 0.0;
  /// B minus the allocated total; zero except after plain rounding.
  double discrepancy = 0.0;

  double allocated() const;
};

/// ((M-1)/M) log(16 lambda_M / (pi (M-1))).
double kappa_mu(int num_antennas);

/// Asymptotically optimal split. Throws DomainError("budget below
/// asymptotic regime") when any continuous share is <= 0.
BitAllocation allocate_bits_closed_form(double budget, const QosTargets& targets,
                                        int num_antennas,
                                        Rounding rounding = Rounding::None);

/// Rounds a continuous allocation. Repair mode hands the leftover bits to
/// the entries with the largest fractional parts so the total equals B.
BitAllocation round_allocation(const BitAllocation& continuous, Rounding rounding);

struct LagrangeSizes {
  std::vector<double> log2_magnitude;  ///< log2 N-dot_k
  std::vector<double> log2_direction;  ///< log2 N-ddot_k
  double log2_multiplier = 0.0;        ///< log2 Lambda
};

/// Continuous codebook sizes from the Lagrange conditions of the simplified
/// problem, in log2 form so that large budgets stay finite.
LagrangeSizes lagrange_sizes(double budget, const std::vector<double>& gammas,
                             const std::vector<double>& theta0s, int num_antennas);

/// log2 Lambda evaluated from its closed form directly.
double lagrange_multiplier_log2(double budget, const std::vector<double>& gammas,
                                const std::vector<double>& theta0s, int num_antennas);

/// (gamma/theta0)(1 + N^-zeta + omega N^-2zeta)(1 + (4 lambda/theta0) Nd^(-1/(M-1)))
/// for one user with N = 2^mag_bits, Nd = 2^dir_bits and y1 = F^-1(q/2).
/// Returns +inf when zeta has no root for this size.
double user_objective(double mag_bits, double dir_bits, double gamma, double q,
                      int num_antennas, const MagnitudeDistribution& dist);

/// Sum of user_objective over users.
double allocation_objective(const BitAllocation& bits, const QosTargets& targets,
                            int num_antennas, const MagnitudeDistribution& dist);

/// Exact integer minimiser of allocation_objective subject to sum of bits =
/// budget, every share >= 1 bit. The objective separates across users, so a
/// per-user table followed by a budget DP is exhaustive.
/// Throws DomainError when no composition has finite objective.
BitAllocation allocate_bits_numerical(int budget, const QosTargets& targets,
                                      const MagnitudeDistribution& dist, int num_antennas);

struct FeasibilityReport {
  double b_min = 0.0;
  std::vector<double> quality;  ///< Q_k = sqrt(gamma_k) / q_k
  double delta = 1.0;           ///< geometric mean of Q over min Q
  double b = 0.0;               ///< additive constant
};

/// Sufficient total feedback rate. Requires gamma_k > 1 and q_k <= 0.2,
/// otherwise throws InvalidArgument("theorem assumptions violated").
FeasibilityReport min_feedback_rate(const QosTargets& targets, int num_antennas);

/// (16M/(pi(M-1))) (pi^(3/2) (M-1) Gamma((M+1)/2) / (16 Gamma(M/2)))^(1/M).
double sigma_mu(int num_antennas);
/// Same constant written as M (16 lambda_M / (pi (M-1)))^((M-1)/M).
double sigma_mu_from_lambda(int num_antennas);

/// (sigma / q_bar) 2^(-B/M^2).
double distortion_bound(double budget, int num_antennas, double q_bar);

}  // namespace fbq
