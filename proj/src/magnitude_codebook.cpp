// SPDX-License-Identifier: Apache-2.0

#include "fbq/magnitude_codebook.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

namespace fbq {

namespace {

constexpr double kZetaMax = 8.0;

// log of n^-z (1 + n^-z)^(n-1); stays finite for n up to ~2^1000.
double log_zeta_lhs(double n, double z) {
  const double t = std::exp(-z * std::log(n));
  return -z * std::log(n) + (n - 1.0) * std::log1p(t);
}

}  // namespace

MagnitudeCodebook::MagnitudeCodebook(std::vector<double> levels, double zeta)
    : levels_(std::move(levels)), zeta_(zeta) {
  if (levels_.size() < 2) {
    throw InvalidArgument("magnitude codebook needs at least two levels");
  }
  if (!(levels_.front() > 0.0)) {
    throw InvalidArgument("first magnitude level must be positive");
  }
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    if (!(levels_[i] > levels_[i - 1])) {
      throw InvalidArgument("magnitude levels must be strictly increasing");
    }
  }
  if (!(zeta_ > 0.0 && zeta_ <= kZetaMax)) {
    throw InvalidArgument("zeta must lie in (0, 8]");
  }
}

double zeta_residual(double n, double y1, double eta, double zeta) {
  return std::exp(log_zeta_lhs(n, zeta)) - eta / y1;
}

double solve_zeta(double n, double y1, double eta) {
  if (!(n >= 2.0)) throw InvalidArgument("solve_zeta requires n >= 2");
  if (!(y1 > 0.0) || !(eta > 0.0)) {
    throw InvalidArgument("solve_zeta requires y1 > 0 and eta > 0");
  }
  const double target = std::log(eta / y1);
  // lhs -> (n - 1) log 2 as z -> 0+, and is strictly decreasing.
  if (!(target < (n - 1.0) * std::log(2.0)) ||
      !(target >= log_zeta_lhs(n, kZetaMax))) {
    throw DomainError("zeta out of range for this codebook size and threshold");
  }
  double lo = 0.0;
  double hi = kZetaMax;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (log_zeta_lhs(n, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double z = 0.5 * (lo + hi);
  return z > 0.0 ? z : hi;
}

MagnitudeCodebook build_uniform_db(std::size_t size, double q_dot,
                                   const MagnitudeDistribution& dist) {
  if (size < 2) throw InvalidArgument("magnitude codebook size must be >= 2");
  if (!(q_dot > 0.0 && q_dot < 1.0)) {
    throw InvalidArgument("magnitude outage probability must be in (0, 1)");
  }
  const double n = static_cast<double>(size);
  const double y1 = dist.inverse_cdf(q_dot);
  const double zeta = solve_zeta(n, y1, dist.eta());
  const double log_ratio = std::log1p(std::exp(-zeta * std::log(n)));
  std::vector<double> levels(size);
  for (std::size_t i = 0; i < size; ++i) {
    levels[i] = y1 * std::exp(static_cast<double>(i) * log_ratio);
  }
  return MagnitudeCodebook(std::move(levels), zeta);
}

MagnitudeQuantization quantize_magnitude(double squared_magnitude,
                                         const MagnitudeCodebook& cb) {
  if (!(squared_magnitude >= 0.0)) {
    throw InvalidArgument("squared magnitude must be non-negative");
  }
  const auto& lv = cb.levels();
  // First level strictly greater than Y; its predecessor owns Y.
  const auto it = std::upper_bound(lv.begin(), lv.end(), squared_magnitude);
  if (it == lv.begin()) return {};
  const auto idx = static_cast<std::size_t>(std::distance(lv.begin(), it) - 1);
  return {idx, lv[idx]};
}

double expected_inverse_quantized(const MagnitudeCodebook& cb,
                                  const MagnitudeDistribution& dist) {
  const auto& lv = cb.levels();
  double sum = 0.0;
  for (std::size_t n = 0; n < lv.size(); ++n) {
    const double upper = n + 1 < lv.size() ? dist.cdf(lv[n + 1]) : 1.0;
    sum += (upper - dist.cdf(lv[n])) / lv[n];
  }
  return sum;
}

double expected_inverse_bound(const MagnitudeCodebook& cb,
                              const MagnitudeDistribution& dist) {
  const double t = std::pow(static_cast<double>(cb.size()), -cb.zeta());
  return dist.rho() * (1.0 + t + dist.omega() * t * t);
}

void write_levels(std::ostream& os, const MagnitudeCodebook& cb) {
  const auto old = os.precision(17);
  for (double y : cb.levels()) os << y << '\n';
  os.precision(old);
}

MagnitudeCodebook read_levels(std::istream& is) {
  std::vector<double> levels;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    levels.push_back(std::stod(line));
  }
  if (levels.size() < 2) {
    throw InvalidArgument("level table needs at least two levels");
  }
  const double ratio = levels[1] / levels[0];
  const double zeta =
      -std::log(ratio - 1.0) / std::log(static_cast<double>(levels.size()));
  return MagnitudeCodebook(std::move(levels), zeta);
}

}  // namespace fbq
