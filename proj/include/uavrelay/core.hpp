#pragma once

// Shared domain types for UAV relay placement: geometry primitives, channel and
// power parameters, and the full problem instance.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uavrelay {

using Point = Eigen::Vector3d;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Observer strictly inside (or on the wall of) a building footprint.
class DegenerateObserverError : public Error {
 public:
  using Error::Error;
};

/// A geometric construction could not be carried out (zero-area face, coincident points).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or scenario contents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Two points that must be distinct coincide (zero link distance).
class ZeroDistanceError : public Error {
 public:
  using Error::Error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Axis-aligned cuboid standing on the ground (z = 0).
struct Building {
  double center_x = 0.0;
  double center_y = 0.0;
  double length = 0.0;  // extent along x
  double width = 0.0;   // extent along y
  double height = 0.0;

  double x_min() const { return center_x - 0.5 * length; }
  double x_max() const { return center_x + 0.5 * length; }
  double y_min() const { return center_y - 0.5 * width; }
  double y_max() const { return center_y + 0.5 * width; }
  Point center() const { return {center_x, center_y, 0.5 * height}; }

  bool footprint_contains(double x, double y) const {
    return x >= x_min() && x <= x_max() && y >= y_min() && y <= y_max();
  }

  bool operator==(const Building&) const = default;
};

/// The deployment region D: [0, x_extent] x [0, y_extent] x [h_min, h_max].
struct AreaBounds {
  double x_extent = 500.0;
  double y_extent = 500.0;
  double h_min = 50.0;
  double h_max = 500.0;

  Point lower() const { return {0.0, 0.0, h_min}; }
  Point upper() const { return {x_extent, y_extent, h_max}; }
  bool contains(const Point& p, double tol = 0.0) const {
    return p.x() >= -tol && p.x() <= x_extent + tol && p.y() >= -tol && p.y() <= y_extent + tol &&
           p.z() >= h_min - tol && p.z() <= h_max + tol;
  }
  Point clamp(const Point& p) const {
    return {std::clamp(p.x(), 0.0, x_extent), std::clamp(p.y(), 0.0, y_extent),
            std::clamp(p.z(), h_min, h_max)};
  }
  /// Tolerance used for the open blockage constraints and boundary classification.
  double geo_epsilon() const { return 1e-6 * std::max(x_extent, y_extent); }

  bool operator==(const AreaBounds&) const = default;
};

/// Large-scale channel parameters, all in linear units.
struct ChannelParams {
  double los_exponent = 2.0;
  double los_gain = db_to_linear(-46.43);
  double nlos_exponent = 3.3;
  double nlos_gain = db_to_linear(-56.43);
  double noise_psd = dbm_to_watts(-174.0);  // W/Hz
  double user_bandwidth = 5e6;               // Hz, per UAV-UE link
  double backhaul_bandwidth = 5e6;           // Hz, BS-UAV link
  double carrier_frequency = 5e9;            // Hz, metadata only

  bool operator==(const ChannelParams&) const = default;
};

struct PowerParams {
  double bs_total = 1.0;   // W
  double uav_total = 1.0;  // W

  bool operator==(const PowerParams&) const = default;
};

/// A complete problem instance.
struct Scenario {
  AreaBounds bounds;
  Point bs{0.0, 0.0, 25.0};
  std::vector<Point> ues;
  std::vector<Building> buildings;
  ChannelParams channel;
  PowerParams power;
  std::uint64_t seed = 0;

  int num_users() const { return static_cast<int>(ues.size()); }

  bool operator==(const Scenario& o) const {
    return bounds == o.bounds && bs == o.bs && ues == o.ues && buildings == o.buildings &&
           channel == o.channel && power == o.power && seed == o.seed;
  }
};

inline void validate(const Building& b) {
  if (!(b.length > 0.0) || !(b.width > 0.0) || !(b.height > 0.0))
    throw ConfigError("building dimensions must be positive");
}

/// Checks every invariant of a scenario; throws ConfigError on the first violation.
inline void validate(const Scenario& s) {
  const auto& a = s.bounds;
  if (!(a.x_extent > 0.0) || !(a.y_extent > 0.0)) throw ConfigError("area extents must be positive");
  if (!(a.h_max > a.h_min)) throw ConfigError("h_max must exceed h_min");
  if (s.ues.empty()) throw ConfigError("scenario needs at least one user");
  for (const auto& b : s.buildings) {
    validate(b);
    if (b.x_min() < 0.0 || b.y_min() < 0.0 || b.x_max() > a.x_extent || b.y_max() > a.y_extent)
      throw ConfigError("building footprint outside area bounds");
    if (b.height > a.h_min) throw ConfigError("h_min below the tallest building");
  }
  for (const auto& ue : s.ues) {
    if (ue.z() != 0.0) throw ConfigError("users must be on the ground (z = 0)");
    if (ue.x() < 0.0 || ue.x() > a.x_extent || ue.y() < 0.0 || ue.y() > a.y_extent)
      throw ConfigError("user outside area bounds");
    for (const auto& b : s.buildings)
      if (b.footprint_contains(ue.x(), ue.y())) throw ConfigError("user inside a building footprint");
  }
  for (const auto& b : s.buildings)
    if (b.footprint_contains(s.bs.x(), s.bs.y()) && s.bs.z() <= b.height)
      throw ConfigError("base station inside a building");
  const auto& c = s.channel;
  if (!(c.los_exponent > 0 && c.los_gain > 0 && c.nlos_exponent > 0 && c.nlos_gain > 0 &&
        c.noise_psd > 0 && c.user_bandwidth > 0 && c.backhaul_bandwidth > 0))
    throw ConfigError("channel parameters must be positive");
  if (!(s.power.bs_total > 0 && s.power.uav_total > 0)) throw ConfigError("power budgets must be positive");
}

}  // namespace uavrelay
