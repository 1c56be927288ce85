#pragma once

// Closed-form max-min power allocation for a fixed UAV position.
//
// With eta_k = beta1 / (N0 W_U d_k^alpha1) and eta_B likewise for the backhaul,
// the optimal allocation equalises eta_k P_k across users and matches the
// backhaul rate to K times the common user rate. Which budget binds is decided
// by comparing the two rate ceilings; the comparison is done in the log domain.

#include <uavrelay/channel.hpp>
#include <uavrelay/core.hpp>

#include <numeric>

namespace uavrelay::power {

struct PowerAllocation {
  double bs = 0.0;            // W
  std::vector<double> users;  // W, one per UE
  double rate = 0.0;          // common per-user rate under LoS gains, bit/s
  bool backhaul_limited = false;

  double uav_total() const { return std::accumulate(users.begin(), users.end(), 0.0); }
};

/// eta for a LoS link of bandwidth `bandwidth` at distance `d`.
inline double snr_per_watt(double d, double bandwidth, const ChannelParams& c) {
  if (!(d > 0.0)) throw ZeroDistanceError("link endpoints coincide");
  return c.los_gain / (c.noise_psd * bandwidth * std::pow(d, c.los_exponent));
}

inline PowerAllocation allocate(const Point& x, const Scenario& s) {
  const auto& c = s.channel;
  const int K = s.num_users();
  if (K < 1) throw ConfigError("allocation needs at least one user");
  const double eta_b = snr_per_watt((x - s.bs).norm(), c.backhaul_bandwidth, c);
  std::vector<double> eta(K);
  double inv_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    eta[k] = snr_per_watt((x - s.ues[k]).norm(), c.user_bandwidth, c);
    inv_sum += 1.0 / eta[k];
  }
  const double eta_v = 1.0 / inv_sum;

  // Natural-log rate ceilings, both expressed per user stream (nats/s).
  const double log_bs = c.backhaul_bandwidth / K * std::log1p(eta_b * s.power.bs_total);
  const double log_uav = c.user_bandwidth * std::log1p(eta_v * s.power.uav_total);

  PowerAllocation out;
  out.users.resize(K);
  if (log_bs < log_uav) {
    out.backhaul_limited = true;
    out.bs = s.power.bs_total;
    // (1 + eta_V P_V)^{W_U} = (1 + eta_B P_B)^{W_B / K}
    const double snr_user = std::expm1(log_bs / c.user_bandwidth);
    for (int k = 0; k < K; ++k) out.users[k] = snr_user / eta[k];
    out.rate = log_bs / std::numbers::ln2;
  } else {
    const double snr_user = eta_v * s.power.uav_total;
    for (int k = 0; k < K; ++k) out.users[k] = snr_user / eta[k];
    out.bs = std::min(s.power.bs_total, std::expm1(K * log_uav / c.backhaul_bandwidth) / eta_b);
    out.rate = log_uav / std::numbers::ln2;
  }
  return out;
}

}  // namespace uavrelay::power
