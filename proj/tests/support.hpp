#pragma once

// Independent reference implementations used as test oracles.

#include <uavrelay/uavrelay.hpp>

#include <cmath>
#include <random>

namespace oracle {

using uavrelay::Building;
using uavrelay::Point;
using uavrelay::Scenario;

/// Does the open segment p -> q meet the closed box? Computed by intersecting
/// the parameter intervals during which each coordinate lies inside the box.
inline bool segment_meets_box(const Point& p, const Point& q, const Building& b) {
  const double lo[3] = {b.x_min(), b.y_min(), 0.0};
  const double hi[3] = {b.x_max(), b.y_max(), b.height};
  double enter = 0.0, leave = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double d = q[a] - p[a];
    if (std::abs(d) < 1e-300) {
      if (p[a] < lo[a] || p[a] > hi[a]) return false;
      continue;
    }
    const double t_lo = (lo[a] - p[a]) / d;
    const double t_hi = (hi[a] - p[a]) / d;
    enter = std::max(enter, std::min(t_lo, t_hi));
    leave = std::min(leave, std::max(t_lo, t_hi));
  }
  return enter <= leave && leave > 0.0 && enter < 1.0;
}

inline bool any_link_blocked(const Point& x, const Scenario& s) {
  for (const auto& b : s.buildings) {
    if (segment_meets_box(s.bs, x, b)) return true;
    for (const auto& u : s.ues)
      if (segment_meets_box(u, x, b)) return true;
  }
  return false;
}

/// Literal W log2(1 + P beta d^-alpha / (N0 W)).
inline double capacity(double d, double p, double w, double alpha, double beta, double n0) {
  return w * std::log2(1.0 + p * beta * std::pow(d, -alpha) / (n0 * w));
}

inline double min_capacity(const Point& x, double pb, const std::vector<double>& pk, const Scenario& s, bool all_los) {
  const auto& c = s.channel;
  auto cap = [&](const Point& e, double p, double w) {
    bool los = all_los;
    if (!all_los) {
      los = true;
      for (const auto& b : s.buildings) los = los && !segment_meets_box(e, x, b);
    }
    return capacity((x - e).norm(), p, w, los ? c.los_exponent : c.nlos_exponent, los ? c.los_gain : c.nlos_gain,
                    c.noise_psd);
  };
  double r = cap(s.bs, pb, c.backhaul_bandwidth) / s.num_users();
  for (int k = 0; k < s.num_users(); ++k) r = std::min(r, cap(s.ues[k], pk[k], c.user_bandwidth));
  return r;
}

inline Point random_point(std::mt19937_64& rng, const uavrelay::AreaBounds& b, double z_hi) {
  std::uniform_real_distribution<double> ux(0.0, b.x_extent), uy(0.0, b.y_extent), uz(b.h_min, z_hi);
  const double x = ux(rng), y = uy(rng);
  return {x, y, uz(rng)};
}

inline Scenario desk_scenario(std::uint64_t seed, int users = 4) {
  auto cfg = uavrelay::scenario::GeneratorConfig{};
  cfg.num_users = users;
  return uavrelay::scenario::generate(cfg, seed);
}

/// Scenario with no buildings on a square area.
inline Scenario open_field(std::vector<Point> ues, double side = 250.0) {
  Scenario s;
  s.bounds = {side, side, 50.0, 500.0};
  s.ues = std::move(ues);
  s.channel.backhaul_bandwidth = s.num_users() * s.channel.user_bandwidth;
  return s;
}

}  // namespace oracle
