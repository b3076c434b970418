// SPDX-License-Identifier: Apache-2.0
//
// Per-user product (magnitude x direction) codebooks, joint quantization of a
// channel set, activity flags and outage statistics.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fbq/direction_codebook.hpp"
#include "fbq/magnitude_codebook.hpp"

namespace fbq {

struct OutageSplit {
  double q_dot;   ///< magnitude outage probability
  double q_ddot;  ///< direction outage probability
  double theta0;  ///< minimum acceptable angle, (pi/2) q_ddot
};

/// Splits a target outage q as q_dot = share q, q_ddot = (1 - share) q and
/// theta0 = (pi/2) q_ddot. The default share 1/2 gives theta0 = (pi/4) q.
OutageSplit outage_split(double q, double magnitude_share = 0.5);

/// (magnitude cells x direction caps) plus the outage ball; size N = Nm Nd + 1.
class ProductCodebook {
 public:
  ProductCodebook(MagnitudeCodebook magnitude, DirectionCodebook direction,
                  double theta0);

  const MagnitudeCodebook& magnitude() const { return magnitude_; }
  const DirectionCodebook& direction() const { return direction_; }
  double theta0() const { return theta0_; }
  double y1() const { return magnitude_.outage_threshold(); }
  std::size_t size() const { return magnitude_.size() * direction_.size() + 1; }

 private:
  MagnitudeCodebook magnitude_;
  DirectionCodebook direction_;
  double theta0_;
};

/// I = (theta >= theta0) and (Y >= y1).
inline bool activity_flag(double theta, double theta0, double squared_magnitude,
                          double y1) {
  return theta >= theta0 && squared_magnitude >= y1;
}

struct UserState {
  double squared_magnitude = 0.0;  ///< true Y (kept for audits)
  /// Quantized magnitude Y~; empty in magnitude outage.
  std::optional<double> quantized_magnitude;
  std::size_t direction_index = 0;
  Vector direction;       ///< quantized direction u~ (unit norm)
  double theta = 0.0;     ///< angle of u~ to span of the other users' u~
  bool magnitude_outage = false;
  bool direction_outage = false;
  bool active = false;    ///< activity flag I
};

struct QuantizedState {
  std::vector<UserState> users;

  int num_users() const { return static_cast<int>(users.size()); }
  int num_active() const;
  std::vector<UnitDirection> directions() const;
};

struct QuantizeOptions {
  /// Feed back Y exactly (r = Y) and disable the magnitude outage region.
  bool perfect_magnitude = false;
};

QuantizedState quantize_all(const ChannelSet& channels,
                            std::span<const ProductCodebook> codebooks,
                            QuantizeOptions options = {});

struct OutageEstimate {
  double total = 0.0;            ///< P(I = 0)
  double magnitude = 0.0;        ///< P(Y < y1)
  double direction = 0.0;        ///< P(theta < theta0)
  double total_stderr = 0.0;
  double magnitude_stderr = 0.0;
  double direction_stderr = 0.0;
  std::size_t trials = 0;
};

/// Monte Carlo outage frequencies per user (binomial standard errors).
/// Requires n_trials >= 1e4.
std::vector<OutageEstimate> estimate_outage(
    std::span<const ProductCodebook> codebooks, std::size_t n_trials, Rng& rng);

}  // namespace fbq
