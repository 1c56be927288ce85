#pragma once

// Large-scale LoS/NLoS path loss and Shannon link capacities.

#include <uavrelay/core.hpp>
#include <uavrelay/geometry.hpp>

#include <numbers>
#include <span>

namespace uavrelay::channel {

/// Capacity in bit/s of a link of bandwidth `bandwidth` carrying `power` watts
/// between `x` and `endpoint`, using the LoS or NLoS path-loss law.
inline double link_capacity(const Point& x, const Point& endpoint, double power, double bandwidth, bool los,
                            const ChannelParams& params) {
  const double d = (x - endpoint).norm();
  if (!(d > 0.0)) throw ZeroDistanceError("link endpoints coincide");
  if (power < 0.0) throw ConfigError("negative transmit power");
  const double alpha = los ? params.los_exponent : params.nlos_exponent;
  const double beta = los ? params.los_gain : params.nlos_gain;
  const double snr = power * beta / (params.noise_psd * bandwidth * std::pow(d, alpha));
  return bandwidth * std::log1p(snr) / std::numbers::ln2;
}

/// Per-link LoS flags for a UAV position: index 0 is the backhaul, 1..K the users.
inline std::vector<bool> los_flags(const Point& x, const Scenario& s) {
  std::vector<bool> flags;
  flags.reserve(s.ues.size() + 1);
  flags.push_back(geometry::line_of_sight(s.bs, x, s.buildings));
  for (const auto& ue : s.ues) flags.push_back(geometry::line_of_sight(ue, x, s.buildings));
  return flags;
}

/// min(min_k R_k, R_B / K) in bit/s for the given per-link propagation flags.
inline double min_capacity(const Point& x, double bs_power, std::span<const double> user_powers,
                           const std::vector<bool>& los, const Scenario& s) {
  const auto& c = s.channel;
  const int K = s.num_users();
  double r = link_capacity(x, s.bs, bs_power, c.backhaul_bandwidth, los[0], c) / K;
  for (int k = 0; k < K; ++k)
    r = std::min(r, link_capacity(x, s.ues[k], user_powers[k], c.user_bandwidth, los[k + 1], c));
  return r;
}

/// Minimum user capacity (bit/s) with every link treated as LoS.
inline double min_capacity_los(const Point& x, double bs_power, std::span<const double> user_powers,
                               const Scenario& s) {
  return min_capacity(x, bs_power, user_powers, std::vector<bool>(s.ues.size() + 1, true), s);
}

/// Minimum user capacity (bit/s) in the actual environment: each link's
/// propagation law is decided by segment/building intersection.
inline double min_capacity_actual(const Point& x, double bs_power, std::span<const double> user_powers,
                                  const Scenario& s) {
  return min_capacity(x, bs_power, user_powers, los_flags(x, s), s);
}

}  // namespace uavrelay::channel
