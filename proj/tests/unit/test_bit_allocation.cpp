// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "fbq/bit_allocation.hpp"
#include "fbq/direction_codebook.hpp"
#include "fbq/power_control.hpp"

namespace fbq {
namespace {

const QosTargets kFig2 = QosTargets::from_db({15, 10, 10}, {0.02, 0.05, 0.05});
const QosTargets kFig4 = QosTargets::from_db({2, 5, 8}, {0.1, 0.1, 0.1});

QosTargets random_targets(Rng& rng, int m) {
  std::uniform_real_distribution<double> g(0.0, 20.0), q(0.01, 0.2);
  std::vector<double> gd, qs;
  for (int k = 0; k < m; ++k) {
    gd.push_back(g(rng));
    qs.push_back(q(rng));
  }
  return QosTargets::from_db(gd, qs);
}

TEST(Kappa, ClosedForms) {
  EXPECT_NEAR(kappa_mu(3), 2.0 / 3.0 * std::log2(8.0 * std::sqrt(2.0) / kPi), 1e-14);
  EXPECT_NEAR(kappa_mu(3), 1.232, 5e-4);
  EXPECT_NEAR(kappa_mu(2), 1.5, 1e-14);
}

TEST(Targets, Validation) {
  EXPECT_THROW(QosTargets::from_db({1, 2}, {0.1}).validate(), InvalidArgument);
  EXPECT_THROW(QosTargets::from_db({1}, {1.0}).validate(), InvalidArgument);
  const auto t = QosTargets::from_db({0, 10}, {0.1, 0.4});
  EXPECT_NEAR(t.gammas[1], 10.0, 1e-12);
  EXPECT_NEAR(t.gamma_geomean(), std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(t.q_geomean(), 0.2, 1e-12);
  EXPECT_NEAR(t.theta0s()[0], 0.025 * kPi, 1e-15);
}

TEST(ClosedForm, HomogeneousEqualShares) {
  const auto t = QosTargets::from_db({7, 7, 7}, {0.05, 0.05, 0.05});
  const auto a = allocate_bits_closed_form(90, t, 3);
  for (double b : a.total_bits) EXPECT_NEAR(b, 30.0, 1e-12);
}

TEST(ClosedForm, HigherQosGetsMoreBits) {
  for (int b = 60; b <= 150; b += 5) {
    const auto a = allocate_bits_closed_form(b, kFig2, 3);
    EXPECT_GT(a.total_bits[0], a.total_bits[1]);
    EXPECT_GT(a.total_bits[0], a.total_bits[2]);
    EXPECT_GT(a.direction_bits[0], a.direction_bits[1]);
  }
}

TEST(ClosedForm, BelowRegime) {
  EXPECT_THROW(allocate_bits_closed_form(10, kFig2, 3), DomainError);
  EXPECT_THROW(allocate_bits_closed_form(0, kFig2, 3), InvalidArgument);
}

TEST(ClosedForm, IdentitiesOnRandomTargets) {
  Rng rng(1);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const int m = 2 + t % 5;
    const auto tg = random_targets(rng, m);
    const double budget = 40.0 * m * m;
    const auto a = allocate_bits_closed_form(budget, tg, m);
    const double gbar = tg.gamma_geomean(), qbar = tg.q_geomean();
    EXPECT_NEAR(a.allocated(), budget, 1e-9);
    const auto ls = lagrange_sizes(budget, tg.gammas, tg.theta0s(), m);
    double log_prod = 0.0;
    for (int k = 0; k < m; ++k) {
      EXPECT_NEAR(a.direction_bits[k],
                  (m - 1) * a.magnitude_bits[k] + (m - 1) * std::log2(1 / tg.qs[k]) + m * a.kappa, 1e-9);
      EXPECT_NEAR(a.total_bits[k],
                  budget / m + m * std::log2(tg.gammas[k] / gbar) + (2 * m - 1) * std::log2(qbar / tg.qs[k]),
                  1e-9);
      EXPECT_NEAR(ls.log2_magnitude[k], a.magnitude_bits[k], 1e-9);
      EXPECT_NEAR(ls.log2_direction[k], a.direction_bits[k], 1e-9);
      log_prod += ls.log2_magnitude[k] + ls.log2_direction[k];
    }
    EXPECT_NEAR(log_prod / budget, 1.0, 1e-9);
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Lagrange, MultiplierFromStationarity) {
  // Lambda recovered from the magnitude stationarity condition of any user.
  const double budget = 120;
  const auto th = kFig2.theta0s();
  const auto ls = lagrange_sizes(budget, kFig2.gammas, th, 3);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(std::log2(kFig2.gammas[k] / th[k]) - ls.log2_magnitude[k], ls.log2_multiplier, 1e-12);
  }
  EXPECT_EQ(ls.log2_multiplier, lagrange_multiplier_log2(budget, kFig2.gammas, th, 3));
}

TEST(Rounding, NearestAndRepair) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto tg = random_targets(rng, 3);
    const double budget = 200 + t;
    const auto cont = allocate_bits_closed_form(budget, tg, 3);
    const auto near = round_allocation(cont, Rounding::Nearest);
    EXPECT_LE(std::abs(near.discrepancy), 3.0);
    EXPECT_NEAR(near.discrepancy, budget - near.allocated(), 1e-12);
    const auto rep = round_allocation(cont, Rounding::NearestWithRepair);
    EXPECT_EQ(rep.allocated(), budget);
    EXPECT_EQ(rep.discrepancy, 0.0);
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(rep.magnitude_bits[k], std::round(rep.magnitude_bits[k]));
      EXPECT_LE(std::abs(rep.magnitude_bits[k] - cont.magnitude_bits[k]), 1.0);
      EXPECT_LE(std::abs(rep.direction_bits[k] - cont.direction_bits[k]), 1.0);
    }
  }
}

TEST(Numerical, MatchesBruteForce) {
  const auto dist = chi_square_facts(3);
  for (const auto& tg : {kFig2, kFig4}) {
    for (int budget = 12; budget <= 21; budget += 3) {
      // Every composition of the budget into six positive shares.
      double best = std::numeric_limits<double>::infinity();
      std::vector<int> bits(6);
      std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == 5) {
          bits[5] = left;
          double c = 0.0;
          for (int k = 0; k < 3; ++k) {
            c += user_objective(bits[2 * k], bits[2 * k + 1], tg.gammas[k], tg.qs[k], 3, dist);
          }
          best = std::min(best, c);
          return;
        }
        for (int b = 1; b <= left - (5 - i); ++b) {
          bits[i] = b;
          rec(i + 1, left - b);
        }
      };
      rec(0, budget);
      if (!std::isfinite(best)) {
        EXPECT_THROW(allocate_bits_numerical(budget, tg, dist, 3), DomainError);
        continue;
      }
      const auto a = allocate_bits_numerical(budget, tg, dist, 3);
      EXPECT_EQ(a.allocated(), budget);
      EXPECT_NEAR(allocation_objective(a, tg, 3, dist), best, 1e-12 * best) << budget;
    }
  }
}

TEST(Numerical, HomogeneousIsSymmetric) {
  const auto dist = chi_square_facts(3);
  const auto tg = QosTargets::from_db({6, 6, 6}, {0.1, 0.1, 0.1});
  for (int budget = 30; budget <= 120; budget += 9) {
    const auto a = allocate_bits_numerical(budget, tg, dist, 3);
    for (int k = 1; k < 3; ++k) {
      EXPECT_LE(std::abs(a.magnitude_bits[k] - a.magnitude_bits[0]), 1.0);
      EXPECT_LE(std::abs(a.total_bits[k] - a.total_bits[0]), 1.0);
    }
  }
}

TEST(Numerical, NoWorseThanRoundedClosedForm) {
  const auto dist = chi_square_facts(3);
  for (int budget = 60; budget <= 150; budget += 10) {
    const auto num = allocate_bits_numerical(budget, kFig2, dist, 3);
    const auto closed = allocate_bits_closed_form(budget, kFig2, 3, Rounding::NearestWithRepair);
    EXPECT_LE(allocation_objective(num, kFig2, 3, dist),
              allocation_objective(closed, kFig2, 3, dist) + 1e-12);
  }
}

TEST(UserObjective, InfiniteWithoutZeta) {
  const auto dist = chi_square_facts(3);
  EXPECT_TRUE(std::isinf(user_objective(1, 10, 10, 0.05, 3, dist)));
  EXPECT_TRUE(std::isinf(user_objective(0, 10, 10, 0.05, 3, dist)));
  EXPECT_TRUE(std::isfinite(user_objective(6, 10, 10, 0.05, 3, dist)));
}

TEST(MinRate, Homogeneous) {
  const auto tg = QosTargets::from_db({10, 10, 10}, {0.05, 0.05, 0.05});
  const auto r = min_feedback_rate(tg, 3);
  EXPECT_NEAR(r.delta, 1.0, 1e-15);
  EXPECT_NEAR(r.b, 4.5 + 13.5 * std::log2(3.0) + 9 * kappa_mu(3), 1e-12);
  const auto tg4 = QosTargets::from_db({10 + 10 * std::log10(4.0), 10 + 10 * std::log10(4.0),
                                        10 + 10 * std::log10(4.0)},
                                       {0.05, 0.05, 0.05});
  EXPECT_NEAR(min_feedback_rate(tg4, 3).b_min - r.b_min, 9.0, 1e-9);
}

TEST(MinRate, Assumptions) {
  EXPECT_THROW(min_feedback_rate(QosTargets::from_db({-1, 10, 10}, {0.1, 0.1, 0.1}), 3),
               InvalidArgument);
  EXPECT_THROW(min_feedback_rate(QosTargets::from_db({10, 10, 10}, {0.3, 0.1, 0.1}), 3),
               InvalidArgument);
  const auto r = min_feedback_rate(kFig2, 3);
  EXPECT_GE(r.delta, 1.0);
  EXPECT_NEAR(r.quality[0], std::sqrt(kFig2.gammas[0]) / 0.02, 1e-12);
}

TEST(MinRate, ScaleCovariance) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    auto tg = random_targets(rng, 3);
    for (auto& g : tg.gammas) g = 1.5 + g;
    const double c = 1.0 + t;
    auto scaled = tg;
    for (auto& g : scaled.gammas) g *= c;
    const auto a = allocate_bits_closed_form(300, tg, 3);
    const auto b = allocate_bits_closed_form(300, scaled, 3);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(a.magnitude_bits[k], b.magnitude_bits[k], 1e-9);
      EXPECT_NEAR(a.total_bits[k], b.total_bits[k], 1e-9);
    }
    EXPECT_NEAR(min_feedback_rate(scaled, 3).b_min - min_feedback_rate(tg, 3).b_min,
                4.5 * std::log2(c), 1e-9);
  }
}

TEST(MinRate, SufficientRateMeetsMqcs) {
  const auto r = min_feedback_rate(kFig2, 3);
  const double budget = std::ceil(r.b_min) + 1;
  const auto th = kFig2.theta0s();
  const auto ls = lagrange_sizes(budget, kFig2.gammas, th, 3);
  for (int k = 0; k < 3; ++k) {
    const double need = std::log2(double(mqcs_min_dir_size(kFig2.gammas[k], th[k], 3)));
    EXPECT_GE(ls.log2_direction[k], need) << k;
  }
}

TEST(Distortion, ExponentLaw) {
  for (double b : {10.0, 50.0, 123.0}) {
    EXPECT_NEAR(distortion_bound(b + 9, 3, 0.1), distortion_bound(b, 3, 0.1) / 2, 1e-15);
  }
}

TEST(Distortion, SigmaTwoPaths) {
  const double direct = 16.0 * 3 / (2 * kPi) *
                        std::cbrt(std::pow(kPi, 1.5) * 2 * boost::math::tgamma(2.0) /
                                  (16 * boost::math::tgamma(1.5)));
  EXPECT_NEAR(sigma_mu(3), direct, 1e-12);
  for (int m = 2; m <= 8; ++m) EXPECT_NEAR(sigma_mu(m), sigma_mu_from_lambda(m), 1e-12 * sigma_mu(m));
}

}  // namespace
}  // namespace fbq
