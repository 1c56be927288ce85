#pragma once

// Comparison schemes: exhaustive lattice searches, the centre placement and
// blockage-unaware optimisation. All use the closed-form LoS power allocation
// and are scored in the actual LoS/NLoS environment.

#include <uavrelay/channel.hpp>
#include <uavrelay/geometry.hpp>
#include <uavrelay/lagrangian.hpp>
#include <uavrelay/power.hpp>

#include <string>

namespace uavrelay::baselines {

struct BaselineResult {
  std::string scheme;
  Point x = Point::Zero();
  power::PowerAllocation allocation;
  double rate = 0.0;     // bit/s, actual environment
  double spacing = 0.0;  // lattice spacing, 0 when not a lattice scheme
};

inline BaselineResult evaluate(std::string scheme, const Point& x, const Scenario& s) {
  BaselineResult r;
  r.scheme = std::move(scheme);
  r.x = x;
  r.allocation = power::allocate(x, s);
  r.rate = channel::min_capacity_actual(x, r.allocation.bs, r.allocation.users, s);
  return r;
}

namespace detail {

inline std::vector<double> axis(double lo, double hi, double spacing) {
  std::vector<double> v;
  const int n = static_cast<int>(std::floor((hi - lo) / spacing + 1e-9));
  for (int i = 0; i <= n; ++i) v.push_back(lo + i * spacing);
  return v;
}

/// Best lattice point over the given altitudes; ties go to the lowest (z, y, x).
inline BaselineResult search(std::string scheme, const Scenario& s, const std::vector<double>& zs, double spacing) {
  if (!(spacing > 0.0)) throw ConfigError("lattice spacing must be positive");
  const auto xs = axis(0.0, s.bounds.x_extent, spacing), ys = axis(0.0, s.bounds.y_extent, spacing);
  if (xs.empty() || ys.empty() || zs.empty()) throw ConfigError("empty search lattice");
  BaselineResult best;
  best.rate = -1.0;
  for (double z : zs)
    for (double y : ys)
      for (double x : xs) {
        const Point p(x, y, z);
        const auto a = power::allocate(p, s);
        const double r = channel::min_capacity_actual(p, a.bs, a.users, s);
        if (r > best.rate) {
          best.x = p;
          best.allocation = a;
          best.rate = r;
        }
      }
  best.scheme = std::move(scheme);
  best.spacing = spacing;
  return best;
}

}  // namespace detail

inline BaselineResult es3d(const Scenario& s, double spacing = 5.0) {
  if (!(spacing > 0.0)) throw ConfigError("lattice spacing must be positive");
  return detail::search("es3d", s, detail::axis(s.bounds.h_min, s.bounds.h_max, spacing), spacing);
}

inline BaselineResult es2d(const Scenario& s, double altitude = 100.0, double spacing = 5.0) {
  return detail::search("es2d", s, {altitude}, spacing);
}

/// Lowest unblocked altitude above the area centre, found in 1 m steps; h_max
/// when the whole column is blocked.
inline BaselineResult center(const Scenario& s, double step = 1.0) {
  const auto regions = geometry::build_regions(s);
  const double eps = s.bounds.geo_epsilon();
  Point x(0.5 * s.bounds.x_extent, 0.5 * s.bounds.y_extent, s.bounds.h_max);
  for (double h = s.bounds.h_min; h <= s.bounds.h_max + 1e-9; h += step) {
    const Point p(x.x(), x.y(), h);
    if (!geometry::is_blocked(p, regions, eps)) {
      x = p;
      break;
    }
  }
  return evaluate("center", x, s);
}

/// Inner-loop positioning at a fixed altitude with every blockage constraint ignored.
inline BaselineResult free(const Scenario& s, double altitude = 100.0, const lagrangian::Config& cfg = {}) {
  lagrangian::Problem prob;
  prob.scenario = &s;
  prob.geo_eps = s.bounds.geo_epsilon();
  const Point start(0.5 * s.bounds.x_extent, 0.5 * s.bounds.y_extent, altitude);
  const auto in = lagrangian::inner_loop(prob, {}, start, {}, cfg, 0, nullptr, std::nullopt, altitude);
  return evaluate("free", in.x, s);
}

}  // namespace uavrelay::baselines
