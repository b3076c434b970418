// SPDX-License-Identifier: Apache-2.0

#include "fbq/bit_allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fbq/direction_codebook.hpp"
#include "fbq/magnitude_codebook.hpp"

namespace fbq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double geomean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::log2(x);
  return std::exp2(s / static_cast<double>(v.size()));
}

}  // namespace

void QosTargets::validate() const {
  if (gammas.empty() || gammas.size() != qs.size()) {
    throw InvalidArgument("need one (gamma, q) pair per user");
  }
  for (double g : gammas) {
    if (!(g > 0.0 && std::isfinite(g))) throw InvalidArgument("gamma must be positive");
  }
  for (double q : qs) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("q must be in (0, 1)");
  }
}

double QosTargets::gamma_geomean() const { return geomean(gammas); }
double QosTargets::q_geomean() const { return geomean(qs); }

std::vector<double> QosTargets::theta0s() const {
  std::vector<double> t;
  for (double q : qs) t.push_back(0.25 * kPi * q);
  return t;
}

QosTargets QosTargets::from_db(const std::vector<double>& gammas_db, std::vector<double> qs) {
  QosTargets t;
  for (double g : gammas_db) t.gammas.push_back(db_to_linear(g));
  t.qs = std::move(qs);
  t.validate();
  return t;
}

double BitAllocation::allocated() const {
  return std::accumulate(total_bits.begin(), total_bits.end(), 0.0);
}

double kappa_mu(int num_antennas) {
  if (num_antennas < 2) throw InvalidArgument("need M >= 2");
  const double m = num_antennas;
  return (m - 1.0) / m * std::log2(16.0 * lambda_m(num_antennas) / (kPi * (m - 1.0)));
}

BitAllocation allocate_bits_closed_form(double budget, const QosTargets& targets,
                                        int num_antennas, Rounding rounding) {
  targets.validate();
  if (!(budget > 0.0)) throw InvalidArgument("budget must be positive");
  if (static_cast<int>(targets.num_users()) != num_antennas) {
    throw InvalidArgument("need one target per antenna");
  }
  const double m = num_antennas;
  const double gbar = targets.gamma_geomean();
  const double qbar = targets.q_geomean();
  BitAllocation a;
  a.budget = budget;
  a.kappa = kappa_mu(num_antennas);
  const double inv_q = std::log2(1.0 / qbar);
  a.mean_magnitude_bits = budget / (m * m) - (m - 1.0) / m * inv_q - a.kappa;
  a.mean_direction_bits = (m - 1.0) * budget / (m * m) + (m - 1.0) / m * inv_q + a.kappa;
  for (std::size_t k = 0; k < targets.num_users(); ++k) {
    const double lg = std::log2(targets.gammas[k] / gbar);
    const double lq = std::log2(qbar / targets.qs[k]);
    const double mag = a.mean_magnitude_bits + lg + lq;
    const double dir = a.mean_direction_bits + (m - 1.0) * lg + 2.0 * (m - 1.0) * lq;
    if (!(mag > 0.0 && dir > 0.0)) throw DomainError("budget below asymptotic regime");
    a.magnitude_bits.push_back(mag);
    a.direction_bits.push_back(dir);
    a.total_bits.push_back(mag + dir);
  }
  return round_allocation(a, rounding);
}

BitAllocation round_allocation(const BitAllocation& continuous, Rounding rounding) {
  BitAllocation a = continuous;
  if (rounding == Rounding::None) return a;
  const std::size_t m = a.magnitude_bits.size();
  if (rounding == Rounding::Nearest) {
    for (std::size_t k = 0; k < m; ++k) {
      a.magnitude_bits[k] = std::round(a.magnitude_bits[k]);
      a.direction_bits[k] = std::round(a.direction_bits[k]);
    }
  } else {
    // Largest remainder over the 2M shares.
    std::vector<double*> shares;
    for (std::size_t k = 0; k < m; ++k) {
      shares.push_back(&a.magnitude_bits[k]);
      shares.push_back(&a.direction_bits[k]);
    }
    std::vector<double> frac;
    double floor_sum = 0.0;
    for (double* s : shares) {
      const double f = std::floor(*s);
      frac.push_back(*s - f);
      *s = f;
      floor_sum += f;
    }
    auto left = static_cast<long>(std::llround(std::round(a.budget) - floor_sum));
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return frac[i] > frac[j]; });
    for (std::size_t i = 0; left > 0 && i < order.size(); ++i, --left) {
      *shares[order[i]] += 1.0;
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    a.total_bits[k] = a.magnitude_bits[k] + a.direction_bits[k];
  }
  a.discrepancy = a.budget - a.allocated();
  return a;
}

double lagrange_multiplier_log2(double budget, const std::vector<double>& gammas,
                                const std::vector<double>& theta0s, int num_antennas) {
  const double m = num_antennas;
  double sum_inv_theta = 0.0;
  for (double t : theta0s) sum_inv_theta += std::log2(1.0 / t);
  return (m - 1.0) / m * std::log2(4.0 * lambda_m(num_antennas) / (m - 1.0)) +
         std::log2(geomean(gammas)) + (2.0 * m - 1.0) / (m * m) * sum_inv_theta -
         budget / (m * m);
}

LagrangeSizes lagrange_sizes(double budget, const std::vector<double>& gammas,
                             const std::vector<double>& theta0s, int num_antennas) {
  if (!(budget > 0.0)) throw InvalidArgument("budget must be positive");
  if (gammas.size() != theta0s.size() || static_cast<int>(gammas.size()) != num_antennas) {
    throw InvalidArgument("need one gamma and theta0 per antenna");
  }
  const double m = num_antennas;
  const double lambda = lambda_m(num_antennas);
  LagrangeSizes s;
  s.log2_multiplier = lagrange_multiplier_log2(budget, gammas, theta0s, num_antennas);
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    const double t = theta0s[k];
    s.log2_magnitude.push_back(std::log2(gammas[k] / t) - s.log2_multiplier);
    s.log2_direction.push_back(
        (m - 1.0) * (std::log2(4.0 * lambda * gammas[k] / ((m - 1.0) * t * t)) -
                     s.log2_multiplier));
  }
  return s;
}

double user_objective(double mag_bits, double dir_bits, double gamma, double q,
                      int num_antennas, const MagnitudeDistribution& dist) {
  const double theta0 = 0.25 * kPi * q;
  if (mag_bits < 1.0 || dir_bits < 0.0) return kInf;
  const double n = std::exp2(mag_bits);
  double zeta = 0.0;
  try {
    zeta = solve_zeta(n, dist.inverse_cdf(0.5 * q), dist.eta());
  } catch (const DomainError&) {
    return kInf;
  }
  const double t = std::pow(n, -zeta);
  const double dir = 4.0 * lambda_m(num_antennas) / theta0 *
                     std::exp2(-dir_bits / (num_antennas - 1.0));
  return gamma / theta0 * (1.0 + t + dist.omega() * t * t) * (1.0 + dir);
}

double allocation_objective(const BitAllocation& bits, const QosTargets& targets,
                            int num_antennas, const MagnitudeDistribution& dist) {
  double s = 0.0;
  for (std::size_t k = 0; k < targets.num_users(); ++k) {
    s += user_objective(bits.magnitude_bits[k], bits.direction_bits[k], targets.gammas[k],
                        targets.qs[k], num_antennas, dist);
  }
  return s;
}

BitAllocation allocate_bits_numerical(int budget, const QosTargets& targets,
                                      const MagnitudeDistribution& dist, int num_antennas) {
  targets.validate();
  const auto m = targets.num_users();
  if (static_cast<int>(m) != num_antennas) throw InvalidArgument("need one target per antenna");
  if (budget < 2 * num_antennas) throw InvalidArgument("budget below 2 bits per user");
  const int max_user = budget - 2 * (num_antennas - 1);

  // best[k][b]: minimal cost for user k with b bits, and its magnitude share.
  std::vector<std::vector<double>> best(m, std::vector<double>(max_user + 1, kInf));
  std::vector<std::vector<int>> best_mag(m, std::vector<int>(max_user + 1, 0));
  for (std::size_t k = 0; k < m; ++k) {
    const double theta0 = 0.25 * kPi * targets.qs[k];
    const double y1 = dist.inverse_cdf(0.5 * targets.qs[k]);
    std::vector<double> mag_factor(max_user + 1, kInf);
    for (int bm = 1; bm < max_user; ++bm) {
      try {
        const double n = std::exp2(bm);
        const double t = std::pow(n, -solve_zeta(n, y1, dist.eta()));
        mag_factor[bm] = 1.0 + t + dist.omega() * t * t;
      } catch (const DomainError&) {
      }
    }
    const double lam = 4.0 * lambda_m(num_antennas) / theta0;
    for (int b = 2; b <= max_user; ++b) {
      for (int bm = 1; bm < b; ++bm) {
        if (!std::isfinite(mag_factor[bm])) continue;
        const double c = targets.gammas[k] / theta0 * mag_factor[bm] *
                         (1.0 + lam * std::exp2(-(b - bm) / (num_antennas - 1.0)));
        if (c < best[k][b]) {
          best[k][b] = c;
          best_mag[k][b] = bm;
        }
      }
    }
  }

  // dp[k][b]: minimal cost of users 0..k-1 using exactly b bits.
  std::vector<std::vector<double>> dp(m + 1, std::vector<double>(budget + 1, kInf));
  std::vector<std::vector<int>> choice(m + 1, std::vector<int>(budget + 1, 0));
  dp[0][0] = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    for (int used = 0; used <= budget; ++used) {
      if (!std::isfinite(dp[k][used])) continue;
      for (int b = 2; b <= max_user && used + b <= budget; ++b) {
        const double c = dp[k][used] + best[k][b];
        if (c < dp[k + 1][used + b]) {
          dp[k + 1][used + b] = c;
          choice[k + 1][used + b] = b;
        }
      }
    }
  }
  if (!std::isfinite(dp[m][budget])) throw DomainError("no feasible bit composition");

  BitAllocation a;
  a.budget = budget;
  a.kappa = kappa_mu(num_antennas);
  a.magnitude_bits.assign(m, 0.0);
  a.direction_bits.assign(m, 0.0);
  a.total_bits.assign(m, 0.0);
  int left = budget;
  for (std::size_t k = m; k > 0; --k) {
    const int b = choice[k][left];
    const int bm = best_mag[k - 1][b];
    a.magnitude_bits[k - 1] = bm;
    a.direction_bits[k - 1] = b - bm;
    a.total_bits[k - 1] = b;
    left -= b;
  }
  return a;
}

FeasibilityReport min_feedback_rate(const QosTargets& targets, int num_antennas) {
  targets.validate();
  for (std::size_t k = 0; k < targets.num_users(); ++k) {
    if (!(targets.gammas[k] > 1.0 && targets.qs[k] <= 0.2)) {
      throw InvalidArgument("theorem assumptions violated");
    }
  }
  const double m = num_antennas;
  FeasibilityReport r;
  for (std::size_t k = 0; k < targets.num_users(); ++k) {
    r.quality.push_back(std::sqrt(targets.gammas[k]) / targets.qs[k]);
  }
  r.delta = geomean(r.quality) / *std::min_element(r.quality.begin(), r.quality.end());
  r.b = 0.5 * m * m + 1.5 * m * m * std::log2(m) + m * m * kappa_mu(num_antennas);
  r.b_min = 0.5 * m * m * std::log2(targets.gamma_geomean()) +
            (m * m - m) * std::log2(1.0 / targets.q_geomean()) + m * m * std::log2(r.delta) +
            r.b;
  return r;
}

double sigma_mu(int num_antennas) {
  if (num_antennas < 2) throw InvalidArgument("need M >= 2");
  const double m = num_antennas;
  const double inner = std::pow(kPi, 1.5) * (m - 1.0) *
                       std::exp(std::lgamma(0.5 * (m + 1.0)) - std::lgamma(0.5 * m)) / 16.0;
  return 16.0 * m / (kPi * (m - 1.0)) * std::pow(inner, 1.0 / m);
}

double sigma_mu_from_lambda(int num_antennas) {
  const double m = num_antennas;
  return m * std::pow(16.0 * lambda_m(num_antennas) / (kPi * (m - 1.0)), (m - 1.0) / m);
}

double distortion_bound(double budget, int num_antennas, double q_bar) {
  if (!(budget > 0.0)) throw InvalidArgument("budget must be positive");
  if (!(q_bar > 0.0 && q_bar < 1.0)) throw InvalidArgument("q_bar must be in (0, 1)");
  const double m = num_antennas;
  return sigma_mu(num_antennas) / q_bar * std::exp2(-budget / (m * m));
}

}  // namespace fbq
