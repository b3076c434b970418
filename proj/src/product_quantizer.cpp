// SPDX-License-Identifier: Apache-2.0

#include "fbq/product_quantizer.hpp"

#include <cmath>

namespace fbq {

OutageSplit outage_split(double q, double magnitude_share) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("q must be in (0, 1)");
  if (!(magnitude_share > 0.0 && magnitude_share < 1.0)) {
    throw InvalidArgument("magnitude share must be in (0, 1)");
  }
  const double q_dot = magnitude_share * q;
  const double q_ddot = q - q_dot;
  return {q_dot, q_ddot, 0.5 * kPi * q_ddot};
}

ProductCodebook::ProductCodebook(MagnitudeCodebook magnitude,
                                 DirectionCodebook direction, double theta0)
    : magnitude_(std::move(magnitude)),
      direction_(std::move(direction)),
      theta0_(theta0) {
  if (!(theta0_ >= 0.0 && theta0_ < kPi / 2)) {
    throw InvalidArgument("theta0 must lie in [0, pi/2)");
  }
}

int QuantizedState::num_active() const {
  int n = 0;
  for (const auto& u : users) n += u.active ? 1 : 0;
  return n;
}

std::vector<UnitDirection> QuantizedState::directions() const {
  std::vector<UnitDirection> out;
  out.reserve(users.size());
  for (const auto& u : users) out.push_back(UnitDirection::normalized(u.direction));
  return out;
}

QuantizedState quantize_all(const ChannelSet& channels,
                            std::span<const ProductCodebook> codebooks,
                            QuantizeOptions options) {
  const int m = channels.num_users();
  if (static_cast<int>(codebooks.size()) != m) {
    throw InvalidArgument("need one product codebook per user");
  }
  QuantizedState state;
  state.users.resize(static_cast<std::size_t>(m));
  std::vector<UnitDirection> dirs;
  dirs.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const auto& cb = codebooks[static_cast<std::size_t>(k)];
    auto& user = state.users[static_cast<std::size_t>(k)];
    user.squared_magnitude = channels.squared_magnitude(k);
    if (options.perfect_magnitude) {
      user.quantized_magnitude = user.squared_magnitude;
      user.magnitude_outage = false;
    } else {
      const auto mq = quantize_magnitude(user.squared_magnitude, cb.magnitude());
      user.magnitude_outage = mq.outage();
      if (!mq.outage()) user.quantized_magnitude = mq.value;
    }
    user.direction_index = quantize_direction(channels.channel(k), cb.direction());
    user.direction = cb.direction().codewords().row(
        static_cast<Eigen::Index>(user.direction_index)).transpose();
    dirs.push_back(UnitDirection::normalized(user.direction));
  }
  std::vector<UnitDirection> others;
  for (int k = 0; k < m; ++k) {
    others.clear();
    for (int l = 0; l < m; ++l) {
      if (l != k) others.push_back(dirs[static_cast<std::size_t>(l)]);
    }
    auto& user = state.users[static_cast<std::size_t>(k)];
    user.theta = angle_to_subspace(dirs[static_cast<std::size_t>(k)], others);
    const auto& cb = codebooks[static_cast<std::size_t>(k)];
    user.direction_outage = user.theta < cb.theta0();
    user.active = !user.direction_outage && !user.magnitude_outage;
  }
  return state;
}

std::vector<OutageEstimate> estimate_outage(
    std::span<const ProductCodebook> codebooks, std::size_t n_trials, Rng& rng) {
  if (n_trials < 10000) throw InvalidArgument("estimate_outage needs >= 1e4 trials");
  const int m = static_cast<int>(codebooks.size());
  std::vector<std::size_t> total(codebooks.size()), mag(codebooks.size()),
      dir(codebooks.size());
  for (std::size_t t = 0; t < n_trials; ++t) {
    const ChannelSet h = sample_channels(rng, m);
    const QuantizedState s = quantize_all(h, codebooks);
    for (std::size_t k = 0; k < s.users.size(); ++k) {
      total[k] += s.users[k].active ? 0 : 1;
      mag[k] += s.users[k].magnitude_outage ? 1 : 0;
      dir[k] += s.users[k].direction_outage ? 1 : 0;
    }
  }
  const double n = static_cast<double>(n_trials);
  auto se = [n](double p) { return std::sqrt(p * (1.0 - p) / n); };
  std::vector<OutageEstimate> out(codebooks.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& o = out[k];
    o.trials = n_trials;
    o.total = static_cast<double>(total[k]) / n;
    o.magnitude = static_cast<double>(mag[k]) / n;
    o.direction = static_cast<double>(dir[k]) / n;
    o.total_stderr = se(o.total);
    o.magnitude_stderr = se(o.magnitude);
    o.direction_stderr = se(o.direction);
  }
  return out;
}

}  // namespace fbq
