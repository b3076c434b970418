// SPDX-License-Identifier: Apache-2.0
//
// Transmit power control for zero-forcing beams: the perfect-CSI baseline,
// robust worst-case designs over sector-type uncertainty regions (closed-form
// upper bound and exact SDP), the codebook size that guarantees feasibility,
// and a worst-case SINR oracle.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "fbq/lmi_solver.hpp"
#include "fbq/product_quantizer.hpp"

namespace fbq {

/// Channels h with sqrt(r) <= ||h|| < sqrt(R) and angle(h, u_tilde) < phi.
struct SectorRegion {
  double r = 1.0;
  double R = std::numeric_limits<double>::infinity();  ///< carried, never used
  Vector u_tilde;
  double phi = 0.0;

  /// Throws InvalidArgument unless 0 < r <= R and phi in (0, pi/2).
  void validate() const;
};

enum class Feasibility { Feasible, Infeasible };

struct PowerAllocation {
  std::vector<double> powers;  ///< linear scale, unit noise power
  Feasibility status = Feasibility::Infeasible;

  bool feasible() const { return status == Feasibility::Feasible; }
  double sum() const;
};

/// Zero-forcing on the true channels. Users with theta_k < theta0_k are
/// silent; the rest get P_k = gamma_k / (Y_k sin^2 theta_k).
PowerAllocation csi_zf_power(const ChannelSet& channels,
                             std::span<const double> gammas,
                             std::span<const double> theta0s);

/// (2 rho / pi) sum gamma_k cot theta0_k.
double csi_power_formula(int num_antennas, std::span<const double> gammas,
                         std::span<const double> theta0s);

/// E[P] of csi_zf_power under i.i.d. Gaussian channels, evaluated from the
/// law of sin(theta), whose density is c (1 - s^2)^((M-3)/2) on [0, 1].
double csi_power_exact(int num_antennas, std::span<const double> gammas,
                       std::span<const double> theta0s);

/// P(theta < theta0) for the angle between a user direction and the span of
/// the M - 1 others, all isotropic.
double direction_outage_probability(int num_antennas, double theta0);

/// Everything the robust designs need about one quantized snapshot.
struct RobustInstance {
  int num_antennas = 0;
  std::vector<bool> active;
  std::vector<double> r;      ///< quantized squared magnitudes (0 if silent)
  std::vector<double> theta;  ///< angle of u~_k to span of the other u~
  std::vector<double> phi;
  std::vector<double> gamma;
  std::vector<UnitDirection> u_tilde;
  std::vector<UnitDirection> beams;  ///< ZF on the quantized directions

  static RobustInstance from_state(const QuantizedState& state,
                                   std::span<const double> phis,
                                   std::span<const double> gammas);
  int num_active() const;
  SectorRegion sector(int k) const;
};

/// Sum-power upper bound obtained by setting the worst-case SINR lower
/// bound of each active user equal to its target. Infeasible when some
/// active user has theta_k <= phi_k or sum alpha_k >= 1.
PowerAllocation closed_form_robust(const RobustInstance& instance);
PowerAllocation closed_form_robust(const QuantizedState& state,
                                   std::span<const double> phis,
                                   std::span<const double> gammas);

/// sin(theta0) / (1 + sqrt((M-1) gamma)): caps with tan(phi) below this value
/// keep every alpha_k under 1/M.
double mqcs_tan_phi_limit(double gamma, double theta0, int num_antennas);

/// Smallest integer N with N >= (4 lambda_M / sin(arctan(limit)))^(M-1).
std::uint64_t mqcs_min_dir_size(double gamma, double theta0, int num_antennas);

/// LMI form of the robust problem over the active users. Variables are laid
/// out as [P_1..P_K, lambda_1..lambda_K, mu_1..mu_K] in active-user order.
struct RobustLmi {
  lmi::Problem problem;
  std::vector<int> active_users;
  int num_antennas = 0;

  int num_active() const { return static_cast<int>(active_users.size()); }
};

/// Throws DomainError("S-procedure equivalence requires M >= 3") for M < 3.
RobustLmi sdp_matrices(const RobustInstance& instance);

/// (1/gamma_k) P_k v_k v_k^T - sum_{l != k} P_l v_l v_l^T - (lambda - mu) I
///   - (mu / cos^2 phi_k) u~_k u~_k^T for full-length power vector.
Matrix robust_block(const RobustInstance& instance, int k,
                    std::span<const double> powers, double lambda, double mu);

/// Smallest eigenvalue of nu1 A1 + nu2 A2 with A1 = -I and
/// A2 = I - u u^T / cos^2 phi; positive means the Polyak condition holds.
double polyak_margin(const Vector& u_tilde, double phi, double nu1, double nu2);

struct SdpOptions {
  double psd_tolerance = 1e-8;
  double relative_tolerance = 1e-6;
};

struct RobustSolution {
  PowerAllocation powers;
  std::vector<double> lambda;  ///< per user, 0 for silent users
  std::vector<double> mu;
  double objective = 0.0;
  std::vector<double> block_min_eigenvalues;  ///< per active user
  int newton_steps = 0;
};

RobustSolution solve_sdp(const RobustInstance& instance, const SdpOptions& options = {});

/// True when multipliers (lambda_k, mu_k) exist that make every active
/// user's block strictly PSD for the given powers.
bool multipliers_exist(const RobustInstance& instance, std::span<const double> powers);

struct WorstCaseSinr {
  /// P_k r sin^2(theta - phi) / ((sum_{l != k} P_l) r sin^2 phi + 1), floored
  /// at 0. A lower bound on the true infimum.
  double analytic = 0.0;
  /// Infimum over sampled channels on ||w|| = sqrt(r), angle(w, u~) <= phi,
  /// refined locally on the cap edge. An upper estimate of the true infimum.
  double sampled = 0.0;
};

/// Per-user worst-case SINR. Users with zero power report zeros.
std::vector<WorstCaseSinr> worst_case_sinr(std::span<const double> powers,
                                           std::span<const UnitDirection> beams,
                                           std::span<const SectorRegion> sectors,
                                           std::size_t n_samples, Rng& rng);
std::vector<WorstCaseSinr> worst_case_sinr(const RobustInstance& instance,
                                           std::span<const double> powers,
                                           std::size_t n_samples, Rng& rng);

struct AsymptoticTerms {
  std::vector<double> e;  ///< gamma / (r sin^2 theta), 0 when silent
  std::vector<double> f;  ///< (2 gamma / r)(cot theta + cot^3 theta)
  double approximate_sum = 0.0;  ///< sum e_k + f_k phi_k
};

AsymptoticTerms asymptotic_power_terms(const RobustInstance& instance);

struct PowerBound {
  double full = 0.0;
  double simplified = 0.0;
};

/// Average sum-power bound for uniform-dB magnitude codebooks and packed
/// direction codebooks, with theta0 = (pi/4) q and q_dot = q/2. Sizes must
/// be >= 2.
PowerBound average_power_bound(int num_antennas, std::span<const double> gammas,
                               std::span<const double> qs,
                               std::span<const double> mag_sizes,
                               std::span<const double> dir_sizes,
                               const MagnitudeDistribution& dist);

/// Plain-text dump of powers, multipliers and block eigenvalues.
void write_trace(std::ostream& os, const RobustInstance& instance,
                 const RobustSolution& solution);

}  // namespace fbq
