// SPDX-License-Identifier: Apache-2.0

#include "fbq/power_control.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numeric>
#include <ostream>

namespace fbq {

namespace {

void check_sizes(std::size_t m, std::span<const double> a, const char* what) {
  if (a.size() != m) throw InvalidArgument(std::string("need one ") + what + " per user");
}

// Residual of u after projection onto span(others); its norm is sin(theta).
Vector orthogonal_residual(const Vector& u, const std::vector<Vector>& others) {
  if (others.empty()) return u;
  Matrix a(u.size(), static_cast<Eigen::Index>(others.size()));
  for (std::size_t i = 0; i < others.size(); ++i) a.col(static_cast<Eigen::Index>(i)) = others[i];
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double tol = 1e-9 * std::max(1.0, s(0));
  Vector r = u;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (s(j) > tol) {
      const Vector b = svd.matrixU().col(j);
      r -= b.dot(u) * b;
    }
  }
  return r;
}

// Beams v_k proportional to the part of u_k orthogonal to every other u_l.
// Equal to the ZF beams when the directions are independent; users whose
// direction lies in the span of the others get v_k = u_k (they are silent).
std::vector<UnitDirection> residual_beams(const std::vector<UnitDirection>& dirs) {
  std::vector<UnitDirection> beams;
  std::vector<Vector> others;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    others.clear();
    for (std::size_t l = 0; l < dirs.size(); ++l) {
      if (l != k) others.push_back(dirs[l].vector());
    }
    Vector r = orthogonal_residual(dirs[k].vector(), others);
    if (r.norm() < 1e-12) r = dirs[k].vector();
    if (r.dot(dirs[k].vector()) < 0.0) r = -r;
    beams.push_back(UnitDirection::normalized(r));
  }
  return beams;
}

double sin_theta_density_constant(int m) {
  return 2.0 * std::exp(std::lgamma(0.5 * m) - std::lgamma(0.5 * (m - 1)) -
                        0.5 * std::log(kPi));
}

}  // namespace

void SectorRegion::validate() const {
  if (!(r > 0.0 && r <= R)) throw InvalidArgument("sector needs 0 < r <= R");
  if (!(phi > 0.0 && phi < kPi / 2)) throw InvalidArgument("sector needs phi in (0, pi/2)");
  if (std::abs(u_tilde.norm() - 1.0) > 1e-12) throw InvalidArgument("sector axis must be unit");
}

double PowerAllocation::sum() const {
  return std::accumulate(powers.begin(), powers.end(), 0.0);
}

PowerAllocation csi_zf_power(const ChannelSet& channels, std::span<const double> gammas,
                             std::span<const double> theta0s) {
  const int m = channels.num_users();
  check_sizes(static_cast<std::size_t>(m), gammas, "target");
  check_sizes(static_cast<std::size_t>(m), theta0s, "theta0");
  std::vector<UnitDirection> dirs;
  for (int k = 0; k < m; ++k) dirs.push_back(channels.direction(k));
  const auto beams = zero_forcing_beams(dirs);
  PowerAllocation out;
  out.status = Feasibility::Feasible;
  out.powers.assign(static_cast<std::size_t>(m), 0.0);
  for (int k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double sin_theta = std::min(1.0, std::abs(dirs[ku].dot(beams[ku])));
    if (std::asin(sin_theta) < theta0s[ku]) continue;
    out.powers[ku] = gammas[ku] / (channels.squared_magnitude(k) * sin_theta * sin_theta);
  }
  return out;
}

double csi_power_formula(int num_antennas, std::span<const double> gammas,
                         std::span<const double> theta0s) {
  check_sizes(gammas.size(), theta0s, "theta0");
  const double rho = chi_square_facts(num_antennas).rho();
  double s = 0.0;
  for (std::size_t k = 0; k < gammas.size(); ++k) s += gammas[k] / std::tan(theta0s[k]);
  return 2.0 * rho / kPi * s;
}

double direction_outage_probability(int num_antennas, double theta0) {
  if (num_antennas < 2) throw InvalidArgument("need M >= 2");
  if (!(theta0 >= 0.0 && theta0 <= kPi / 2)) throw InvalidArgument("theta0 out of range");
  // sin^2(theta) ~ Beta(1/2, (M-1)/2).
  const double s = std::sin(theta0);
  return boost::math::ibeta(0.5, 0.5 * (num_antennas - 1), s * s);
}

double csi_power_exact(int num_antennas, std::span<const double> gammas,
                       std::span<const double> theta0s) {
  check_sizes(gammas.size(), theta0s, "theta0");
  const double rho = chi_square_facts(num_antennas).rho();
  const double c = sin_theta_density_constant(num_antennas);
  const double expo = 0.5 * (num_antennas - 3);
  boost::math::quadrature::tanh_sinh<double> integrator;
  double total = 0.0;
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    const double s0 = std::sin(theta0s[k]);
    const double tail = integrator.integrate(
        [&](double s) { return std::pow(1.0 - s * s, expo) / (s * s); }, s0, 1.0);
    total += gammas[k] * rho * c * tail;
  }
  return total;
}

RobustInstance RobustInstance::from_state(const QuantizedState& state,
                                          std::span<const double> phis,
                                          std::span<const double> gammas) {
  const auto m = state.users.size();
  check_sizes(m, phis, "phi");
  check_sizes(m, gammas, "target");
  RobustInstance in;
  in.num_antennas = static_cast<int>(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& u = state.users[k];
    const bool active = u.active && u.quantized_magnitude.has_value();
    in.active.push_back(active);
    in.r.push_back(active ? *u.quantized_magnitude : 0.0);
    in.theta.push_back(u.theta);
    in.phi.push_back(phis[k]);
    in.gamma.push_back(gammas[k]);
    in.u_tilde.push_back(UnitDirection::normalized(u.direction));
  }
  in.beams = residual_beams(in.u_tilde);
  return in;
}

int RobustInstance::num_active() const {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

SectorRegion RobustInstance::sector(int k) const {
  const auto ku = static_cast<std::size_t>(k);
  SectorRegion s;
  s.r = r[ku];
  s.u_tilde = u_tilde[ku].vector();
  s.phi = phi[ku];
  return s;
}

PowerAllocation closed_form_robust(const RobustInstance& in) {
  const auto m = static_cast<std::size_t>(in.num_antennas);
  PowerAllocation out;
  out.powers.assign(m, 0.0);
  std::vector<double> alpha(m, 0.0), ratio(m, 0.0);
  double sum_alpha = 0.0, sum_ratio = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (!in.active[k]) continue;
    if (in.theta[k] <= in.phi[k]) return out;
    const double sp = std::sin(in.phi[k]);
    const double sd = std::sin(in.theta[k] - in.phi[k]);
    const double denom = in.gamma[k] * sp * sp + sd * sd;
    alpha[k] = in.gamma[k] * sp * sp / denom;
    ratio[k] = in.gamma[k] / in.r[k] / denom;  // alpha_k / beta_k
    sum_alpha += alpha[k];
    sum_ratio += ratio[k];
  }
  if (sum_alpha >= 1.0) return out;
  const double total = sum_ratio / (1.0 - sum_alpha);
  for (std::size_t k = 0; k < m; ++k) {
    if (in.active[k]) out.powers[k] = ratio[k] + alpha[k] * total;
  }
  out.status = Feasibility::Feasible;
  return out;
}

PowerAllocation closed_form_robust(const QuantizedState& state, std::span<const double> phis,
                                   std::span<const double> gammas) {
  return closed_form_robust(RobustInstance::from_state(state, phis, gammas));
}

double mqcs_tan_phi_limit(double gamma, double theta0, int num_antennas) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (!(theta0 > 0.0 && theta0 < kPi / 2)) throw InvalidArgument("theta0 must be in (0, pi/2)");
  if (num_antennas < 2) throw InvalidArgument("need M >= 2");
  return std::sin(theta0) / (1.0 + std::sqrt((num_antennas - 1) * gamma));
}

std::uint64_t mqcs_min_dir_size(double gamma, double theta0, int num_antennas) {
  const double limit = mqcs_tan_phi_limit(gamma, theta0, num_antennas);
  const double sin_phi = std::sin(std::atan(limit));
  const double n = std::pow(4.0 * lambda_m(num_antennas) / sin_phi, num_antennas - 1);
  if (!(n < 9.2e18)) throw DomainError("MQCS size exceeds 64-bit range");
  return static_cast<std::uint64_t>(std::ceil(n));
}

RobustLmi sdp_matrices(const RobustInstance& in) {
  if (in.num_antennas < 3) throw DomainError("S-procedure equivalence requires M >= 3");
  const int m = in.num_antennas;
  RobustLmi out;
  out.num_antennas = m;
  for (int k = 0; k < m; ++k) {
    if (in.active[static_cast<std::size_t>(k)]) out.active_users.push_back(k);
  }
  const int na = out.num_active();
  auto& p = out.problem;
  p.num_variables = 3 * na;
  p.objective = Vector::Zero(3 * na);
  p.objective.head(na).setOnes();
  const Matrix zero = Matrix::Zero(m, m);
  const Matrix eye = Matrix::Identity(m, m);
  for (int a = 0; a < na; ++a) {
    const auto k = static_cast<std::size_t>(out.active_users[static_cast<std::size_t>(a)]);
    lmi::MatrixInequality blk;
    blk.constant = zero;
    blk.coefficients.assign(static_cast<std::size_t>(3 * na), zero);
    for (int b = 0; b < na; ++b) {
      const auto l = static_cast<std::size_t>(out.active_users[static_cast<std::size_t>(b)]);
      const Vector& v = in.beams[l].vector();
      const Matrix vv = v * v.transpose();
      blk.coefficients[static_cast<std::size_t>(b)] = l == k ? Matrix(vv / in.gamma[k]) : Matrix(-vv);
    }
    const Vector& u = in.u_tilde[k].vector();
    const double c = std::cos(in.phi[k]);
    blk.coefficients[static_cast<std::size_t>(na + a)] = -eye;
    blk.coefficients[static_cast<std::size_t>(2 * na + a)] = eye - (u * u.transpose()) / (c * c);
    p.blocks.push_back(std::move(blk));

    lmi::LinearInequality power, lambda, mu;
    power.a = Vector::Unit(3 * na, a);
    lambda.a = Vector::Unit(3 * na, na + a);
    lambda.b = -1.0 / in.r[k];
    mu.a = Vector::Unit(3 * na, 2 * na + a);
    p.linear.push_back(power);
    p.linear.push_back(lambda);
    p.linear.push_back(mu);
  }
  return out;
}

Matrix robust_block(const RobustInstance& in, int k, std::span<const double> powers,
                    double lambda, double mu) {
  const int m = in.num_antennas;
  const auto ku = static_cast<std::size_t>(k);
  Matrix f = Matrix::Zero(m, m);
  for (int l = 0; l < m; ++l) {
    const auto lu = static_cast<std::size_t>(l);
    const Vector& v = in.beams[lu].vector();
    const double w = l == k ? powers[lu] / in.gamma[ku] : -powers[lu];
    f += w * v * v.transpose();
  }
  const Vector& u = in.u_tilde[ku].vector();
  const double c = std::cos(in.phi[ku]);
  f -= (lambda - mu) * Matrix::Identity(m, m);
  f -= (mu / (c * c)) * u * u.transpose();
  return 0.5 * (f + f.transpose());
}

double polyak_margin(const Vector& u_tilde, double phi, double nu1, double nu2) {
  const auto m = u_tilde.size();
  const double c = std::cos(phi);
  const Matrix a1 = -Matrix::Identity(m, m);
  const Matrix a2 = Matrix::Identity(m, m) - (u_tilde * u_tilde.transpose()) / (c * c);
  return lmi::min_eigenvalue(nu1 * a1 + nu2 * a2);
}

RobustSolution solve_sdp(const RobustInstance& in, const SdpOptions& options) {
  const RobustLmi lmi_problem = sdp_matrices(in);
  const auto m = static_cast<std::size_t>(in.num_antennas);
  RobustSolution sol;
  sol.powers.powers.assign(m, 0.0);
  sol.lambda.assign(m, 0.0);
  sol.mu.assign(m, 0.0);
  const int na = lmi_problem.num_active();
  if (na == 0) {
    sol.powers.status = Feasibility::Feasible;
    return sol;
  }
  lmi::Options lo;
  lo.relative_gap = options.relative_tolerance;
  const lmi::Result res = lmi::solve(lmi_problem.problem, lo);
  sol.newton_steps = res.newton_steps;
  if (res.status == lmi::Status::Infeasible) return sol;
  for (int a = 0; a < na; ++a) {
    const auto k = static_cast<std::size_t>(lmi_problem.active_users[static_cast<std::size_t>(a)]);
    sol.powers.powers[k] = std::max(0.0, res.x(a));
    sol.lambda[k] = res.x(na + a);
    sol.mu[k] = res.x(2 * na + a);
  }
  sol.block_min_eigenvalues = res.block_min_eigenvalues;
  sol.objective = sol.powers.sum();
  const bool certified =
      std::all_of(res.block_min_eigenvalues.begin(), res.block_min_eigenvalues.end(),
                  [&](double e) { return e >= -options.psd_tolerance; }) &&
      res.min_linear_slack >= -options.psd_tolerance;
  sol.powers.status = certified ? Feasibility::Feasible : Feasibility::Infeasible;
  return sol;
}

bool multipliers_exist(const RobustInstance& in, std::span<const double> powers) {
  const int m = in.num_antennas;
  check_sizes(static_cast<std::size_t>(m), powers, "power");
  for (int k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (!in.active[ku]) continue;
    lmi::Problem p;
    p.num_variables = 2;
    p.objective = Vector::Zero(2);
    lmi::MatrixInequality blk;
    blk.constant = robust_block(in, k, powers, 0.0, 0.0);
    const Vector& u = in.u_tilde[ku].vector();
    const double c = std::cos(in.phi[ku]);
    blk.coefficients.push_back(-Matrix::Identity(m, m));
    blk.coefficients.push_back(Matrix::Identity(m, m) - (u * u.transpose()) / (c * c));
    p.blocks.push_back(std::move(blk));
    lmi::LinearInequality lambda, mu;
    lambda.a = Vector::Unit(2, 0);
    lambda.b = -1.0 / in.r[ku];
    mu.a = Vector::Unit(2, 1);
    p.linear = {lambda, mu};
    if (lmi::find_strictly_feasible(p).status != lmi::Status::Optimal) return false;
  }
  return true;
}

std::vector<WorstCaseSinr> worst_case_sinr(std::span<const double> powers,
                                           std::span<const UnitDirection> beams,
                                           std::span<const SectorRegion> sectors,
                                           std::size_t n_samples, Rng& rng) {
  const auto m = powers.size();
  if (beams.size() != m || sectors.size() != m) throw InvalidArgument("size mismatch");
  const auto dim = beams.empty() ? 0 : beams[0].dim();
  std::vector<WorstCaseSinr> out(m);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (std::size_t k = 0; k < m; ++k) {
    if (!(powers[k] > 0.0)) continue;
    const auto& sec = sectors[k];
    if (!(sec.r > 0.0) || !(sec.phi >= 0.0 && sec.phi < kPi / 2)) {
      throw InvalidArgument("invalid sector");
    }
    const Vector& u = sec.u_tilde;
    const Vector& v = beams[k].vector();
    Matrix g = Matrix::Zero(dim, dim);
    double p_other = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      if (l == k) continue;
      g += powers[l] * beams[l].vector() * beams[l].vector().transpose();
      p_other += powers[l];
    }
    const double a = sec.r * powers[k];
    auto sinr = [&](const Vector& d) {
      const double s = d.dot(v);
      return a * s * s / (sec.r * d.dot(g * d) + 1.0);
    };

    const double theta = std::asin(std::min(1.0, std::abs(u.dot(v))));
    if (theta > sec.phi) {
      const double sd = std::sin(theta - sec.phi), sp = std::sin(sec.phi);
      out[k].analytic = a * sd * sd / (p_other * sec.r * sp * sp + 1.0);
    }

    // Orthonormal basis of the complement of u.
    const Matrix u_col = u;
    Eigen::HouseholderQR<Matrix> qr(u_col);
    const Matrix q = Matrix(qr.householderQ()).rightCols(dim - 1);
    const double cp = std::cos(sec.phi), sp = std::sin(sec.phi);
    auto edge_point = [&](const Vector& c) -> Vector { return cp * u + sp * (q * c); };

    double best = sinr(u);
    std::vector<std::pair<double, Vector>> seeds;
    Vector c(dim - 1);
    for (std::size_t i = 0; i < n_samples; ++i) {
      do {
        for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = normal(rng);
      } while (c.norm() < 1e-12);
      c.normalize();
      Vector d;
      if (i % 10 == 9) {
        // Interior sample.
        const double psi = sec.phi * std::pow(uni(rng), 1.0 / (dim - 1));
        d = std::cos(psi) * u + std::sin(psi) * (q * c);
      } else {
        d = edge_point(c);
      }
      const double val = sinr(d);
      best = std::min(best, val);
      if (i % 10 != 9) {
        seeds.emplace_back(val, c);
        if (seeds.size() > 64) {
          std::nth_element(seeds.begin(), seeds.begin() + 8, seeds.end(),
                           [](const auto& x, const auto& y) { return x.first < y.first; });
          seeds.resize(8);
        }
      }
    }
    std::sort(seeds.begin(), seeds.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    if (seeds.size() > 4) seeds.resize(4);

    // Riemannian descent on the cap edge from the best samples.
    for (auto& [val, cc] : seeds) {
      double fc = val;
      double step = 0.1;
      for (int it = 0; it < 300 && step > 1e-15; ++it) {
        const Vector d = edge_point(cc);
        const double s = d.dot(v);
        const double den = sec.r * d.dot(g * d) + 1.0;
        const double num = a * s * s;
        const Vector grad_d = (2.0 * a * s * v * den - num * 2.0 * sec.r * (g * d)) / (den * den);
        Vector grad_c = sp * (q.transpose() * grad_d);
        grad_c -= grad_c.dot(cc) * cc;
        const double gn = grad_c.norm();
        if (gn < 1e-300) break;
        while (step > 1e-15) {
          Vector trial = cc - step * grad_c / gn;
          trial.normalize();
          const double ft = sinr(edge_point(trial));
          if (ft < fc) {
            cc = trial;
            fc = ft;
            step *= 2.0;
            break;
          }
          step *= 0.5;
        }
      }
      best = std::min(best, fc);
    }
    out[k].sampled = best;
  }
  return out;
}

std::vector<WorstCaseSinr> worst_case_sinr(const RobustInstance& in,
                                           std::span<const double> powers,
                                           std::size_t n_samples, Rng& rng) {
  std::vector<SectorRegion> sectors;
  for (int k = 0; k < in.num_antennas; ++k) {
    SectorRegion s = in.sector(k);
    if (!in.active[static_cast<std::size_t>(k)]) s.r = 1.0;
    sectors.push_back(std::move(s));
  }
  return worst_case_sinr(powers, in.beams, sectors, n_samples, rng);
}

AsymptoticTerms asymptotic_power_terms(const RobustInstance& in) {
  const auto m = static_cast<std::size_t>(in.num_antennas);
  AsymptoticTerms t;
  t.e.assign(m, 0.0);
  t.f.assign(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    if (!in.active[k]) continue;
    const double z = 1.0 / std::tan(in.theta[k]);
    const double g = in.gamma[k] / in.r[k];
    t.e[k] = g * (1.0 + z * z);
    t.f[k] = 2.0 * g * (z + z * z * z);
    t.approximate_sum += t.e[k] + t.f[k] * in.phi[k];
  }
  return t;
}

PowerBound average_power_bound(int num_antennas, std::span<const double> gammas,
                               std::span<const double> qs, std::span<const double> mag_sizes,
                               std::span<const double> dir_sizes,
                               const MagnitudeDistribution& dist) {
  const auto m = gammas.size();
  check_sizes(m, qs, "q");
  check_sizes(m, mag_sizes, "magnitude size");
  check_sizes(m, dir_sizes, "direction size");
  const double lambda = lambda_m(num_antennas);
  PowerBound b;
  for (std::size_t k = 0; k < m; ++k) {
    if (!(mag_sizes[k] >= 2.0 && dir_sizes[k] >= 2.0)) {
      throw InvalidArgument("codebook sizes must be >= 2");
    }
    const double theta0 = 0.25 * kPi * qs[k];
    const double y1 = dist.inverse_cdf(0.5 * qs[k]);
    const double zeta = solve_zeta(mag_sizes[k], y1, dist.eta());
    const double t = std::pow(mag_sizes[k], -zeta);
    const double dir = 4.0 * lambda / theta0 * std::pow(dir_sizes[k], -1.0 / (num_antennas - 1));
    const double scale = gammas[k] / theta0;
    b.full += scale * (1.0 + t + dist.omega() * t * t) * (1.0 + dir);
    b.simplified += scale * (1.0 + 1.0 / mag_sizes[k] + dir);
  }
  const double c = 2.0 * dist.rho() / kPi;
  b.full *= c;
  b.simplified *= c;
  return b;
}

void write_trace(std::ostream& os, const RobustInstance& in, const RobustSolution& sol) {
  const auto old = os.precision(17);
  os << "status " << (sol.powers.feasible() ? "feasible" : "infeasible") << '\n';
  os << "objective " << sol.objective << '\n';
  os << "newton_steps " << sol.newton_steps << '\n';
  std::size_t a = 0;
  for (int k = 0; k < in.num_antennas; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    os << "user " << k << " active " << in.active[ku] << " power " << sol.powers.powers[ku]
       << " lambda " << sol.lambda[ku] << " mu " << sol.mu[ku];
    if (in.active[ku] && a < sol.block_min_eigenvalues.size()) {
      os << " min_eig " << sol.block_min_eigenvalues[a++];
    }
    os << '\n';
  }
  os.precision(old);
}

}  // namespace fbq
