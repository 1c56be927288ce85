#pragma once

// Random Manhattan-style scenarios and the scenario JSON format.
//
// Randomness comes from std::mt19937_64. Uniform variates are formed from the
// top 53 bits of each draw and every other distribution is sampled by inverse
// CDF, so a seed produces the same world on every platform.

#include <uavrelay/core.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

namespace uavrelay::scenario {

using json = nlohmann::json;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Rayleigh with scale sigma.
  double rayleigh(double sigma) { return sigma * std::sqrt(-2.0 * std::log1p(-uniform())); }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of trial `index` in a batch seeded with `base`.
inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) { return splitmix64(base ^ splitmix64(index)); }

struct GeneratorConfig {
  double area_x = 250.0;  // m
  double area_y = 250.0;  // m
  int grid_x = 3;
  int grid_y = 3;
  double density = 0.2;        // footprint area / ground area
  double mean_height = 23.0;   // m, before truncation
  double height_lo = 3.0;      // m
  double height_hi = 50.0;     // m
  int num_users = 4;
  double h_min = 50.0;
  double h_max = 500.0;
  Point bs{0.0, 0.0, 25.0};
  double ue_clearance = 0.5;   // m kept between users and walls
  double bs_power_dbm = 30.0;
  double uav_power_dbm = 30.0;
  double user_bandwidth = 5e6;  // Hz
  double backhaul_bandwidth = 0.0;  // Hz; 0 means num_users * user_bandwidth
  ChannelParams channel;        // bandwidths are overwritten from the fields above

  /// The 500 x 500 m, 5 x 5 block world.
  static GeneratorConfig full_scale() {
    GeneratorConfig c;
    c.area_x = c.area_y = 500.0;
    c.grid_x = c.grid_y = 5;
    return c;
  }

  double pitch_x() const { return area_x / grid_x; }
  double pitch_y() const { return area_y / grid_y; }
  /// Nominal footprint side s*; sides are uniform on [0.7 s*, 1.3 s*].
  double nominal_side() const { return std::sqrt(density * area_x * area_y / (grid_x * grid_y)); }
};

inline void validate(const GeneratorConfig& c) {
  if (!(c.area_x > 0.0 && c.area_y > 0.0)) throw ConfigError("area must be positive");
  if (c.grid_x < 1 || c.grid_y < 1) throw ConfigError("building grid must be at least 1 x 1");
  if (!(c.density > 0.0 && c.density < 1.0)) throw ConfigError("density must lie in (0, 1)");
  if (!(c.height_lo > 0.0 && c.height_lo < c.height_hi)) throw ConfigError("height clip bounds must be ordered");
  if (!(c.mean_height > 0.0)) throw ConfigError("mean height must be positive");
  if (c.num_users < 1) throw ConfigError("need at least one user");
  if (c.height_hi > c.h_min) throw ConfigError("h_min must clear the tallest possible building");
  if (1.3 * c.nominal_side() >= std::min(c.pitch_x(), c.pitch_y()))
    throw ConfigError("density unreachable: footprints would overlap at this grid pitch");
}

inline Scenario generate(const GeneratorConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);
  Scenario s;
  s.seed = seed;
  s.bounds = {cfg.area_x, cfg.area_y, cfg.h_min, cfg.h_max};
  s.bs = cfg.bs;
  s.channel = cfg.channel;
  s.channel.user_bandwidth = cfg.user_bandwidth;
  s.channel.backhaul_bandwidth = cfg.backhaul_bandwidth > 0.0 ? cfg.backhaul_bandwidth : cfg.num_users * cfg.user_bandwidth;
  s.power = {dbm_to_watts(cfg.bs_power_dbm), dbm_to_watts(cfg.uav_power_dbm)};

  const double side = cfg.nominal_side();
  const double sigma = cfg.mean_height / std::sqrt(std::numbers::pi / 2.0);
  for (int gy = 0; gy < cfg.grid_y; ++gy)
    for (int gx = 0; gx < cfg.grid_x; ++gx) {
      Building b;
      b.center_x = cfg.pitch_x() * (gx + 0.5);
      b.center_y = cfg.pitch_y() * (gy + 0.5);
      b.length = rng.uniform(0.7 * side, 1.3 * side);
      b.width = rng.uniform(0.7 * side, 1.3 * side);
      do {
        b.height = rng.rayleigh(sigma);
      } while (b.height < cfg.height_lo || b.height > cfg.height_hi);
      s.buildings.push_back(b);
    }

  const double c = cfg.ue_clearance;
  while (s.num_users() < cfg.num_users) {
    const Point p(rng.uniform(0.0, cfg.area_x), rng.uniform(0.0, cfg.area_y), 0.0);
    bool clear = true;
    for (const auto& b : s.buildings)
      if (p.x() >= b.x_min() - c && p.x() <= b.x_max() + c && p.y() >= b.y_min() - c && p.y() <= b.y_max() + c) {
        clear = false;
        break;
      }
    if (clear) s.ues.push_back(p);
  }
  uavrelay::validate(s);
  return s;
}

// JSON ----------------------------------------------------------------------

namespace detail {

inline json point_json(const Point& p) { return {{"x_m", p.x()}, {"y_m", p.y()}, {"z_m", p.z()}}; }

inline Point point_from(const json& j) { return {j.at("x_m").get<double>(), j.at("y_m").get<double>(), j.value("z_m", 0.0)}; }

/// Reads `key` (linear), or `key_db` / `key_dbm` converted to linear; `fallback` otherwise.
inline double linear_or_db(const json& j, const std::string& key, const std::string& db_key, bool dbm, double fallback) {
  if (j.contains(key)) return j.at(key).get<double>();
  if (j.contains(db_key)) return dbm ? dbm_to_watts(j.at(db_key).get<double>()) : db_to_linear(j.at(db_key).get<double>());
  return fallback;
}

}  // namespace detail

inline json to_json(const Scenario& s) {
  json j;
  j["seed"] = s.seed;
  j["area"] = {{"x_m", s.bounds.x_extent},
               {"y_m", s.bounds.y_extent},
               {"h_min_m", s.bounds.h_min},
               {"h_max_m", s.bounds.h_max}};
  j["bs"] = detail::point_json(s.bs);
  j["ues"] = json::array();
  for (const auto& u : s.ues) j["ues"].push_back(detail::point_json(u));
  j["buildings"] = json::array();
  for (const auto& b : s.buildings)
    j["buildings"].push_back({{"center_x_m", b.center_x},
                              {"center_y_m", b.center_y},
                              {"length_m", b.length},
                              {"width_m", b.width},
                              {"height_m", b.height}});
  const auto& c = s.channel;
  j["channel"] = {{"los_exponent", c.los_exponent},
                  {"los_gain", c.los_gain},
                  {"nlos_exponent", c.nlos_exponent},
                  {"nlos_gain", c.nlos_gain},
                  {"noise_psd_w_per_hz", c.noise_psd},
                  {"user_bandwidth_hz", c.user_bandwidth},
                  {"backhaul_bandwidth_hz", c.backhaul_bandwidth},
                  {"carrier_frequency_hz", c.carrier_frequency}};
  j["power"] = {{"bs_total_w", s.power.bs_total}, {"uav_total_w", s.power.uav_total}};
  return j;
}

inline Scenario from_json(const json& j) {
  try {
    Scenario s;
    s.seed = j.value("seed", std::uint64_t{0});
    const auto& a = j.at("area");
    s.bounds.x_extent = a.at("x_m").get<double>();
    s.bounds.y_extent = a.at("y_m").get<double>();
    s.bounds.h_min = a.value("h_min_m", s.bounds.h_min);
    s.bounds.h_max = a.value("h_max_m", s.bounds.h_max);
    if (j.contains("bs")) s.bs = detail::point_from(j.at("bs"));
    for (const auto& u : j.at("ues")) s.ues.push_back(detail::point_from(u));
    for (const auto& b : j.value("buildings", json::array()))
      s.buildings.push_back({b.at("center_x_m").get<double>(), b.at("center_y_m").get<double>(),
                             b.at("length_m").get<double>(), b.at("width_m").get<double>(),
                             b.at("height_m").get<double>()});
    const int K = s.num_users();
    s.channel.backhaul_bandwidth = K * s.channel.user_bandwidth;
    if (j.contains("channel")) {
      const auto& c = j.at("channel");
      auto& p = s.channel;
      p.los_exponent = c.value("los_exponent", p.los_exponent);
      p.los_gain = detail::linear_or_db(c, "los_gain", "los_gain_db", false, p.los_gain);
      p.nlos_exponent = c.value("nlos_exponent", p.nlos_exponent);
      p.nlos_gain = detail::linear_or_db(c, "nlos_gain", "nlos_gain_db", false, p.nlos_gain);
      p.noise_psd = detail::linear_or_db(c, "noise_psd_w_per_hz", "noise_psd_dbm_per_hz", true, p.noise_psd);
      p.user_bandwidth = c.value("user_bandwidth_hz", p.user_bandwidth);
      p.backhaul_bandwidth = c.value("backhaul_bandwidth_hz", K * p.user_bandwidth);
      p.carrier_frequency = c.value("carrier_frequency_hz", p.carrier_frequency);
    }
    if (j.contains("power")) {
      const auto& p = j.at("power");
      s.power.bs_total = detail::linear_or_db(p, "bs_total_w", "bs_total_dbm", true, s.power.bs_total);
      s.power.uav_total = detail::linear_or_db(p, "uav_total_w", "uav_total_dbm", true, s.power.uav_total);
    }
    uavrelay::validate(s);
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
}

inline Scenario load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed scenario file " + path + ": " + e.what());
  }
  return from_json(j);
}

inline void save(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << to_json(s).dump(2) << '\n';
}

inline GeneratorConfig config_from_json(const json& j) {
  try {
    GeneratorConfig c;
    c.area_x = j.value("area_x_m", c.area_x);
    c.area_y = j.value("area_y_m", c.area_y);
    c.grid_x = j.value("grid_x", c.grid_x);
    c.grid_y = j.value("grid_y", c.grid_y);
    c.density = j.value("density", c.density);
    c.mean_height = j.value("mean_height_m", c.mean_height);
    c.height_lo = j.value("height_min_m", c.height_lo);
    c.height_hi = j.value("height_max_m", c.height_hi);
    c.num_users = j.value("num_users", c.num_users);
    c.h_min = j.value("h_min_m", c.h_min);
    c.h_max = j.value("h_max_m", c.h_max);
    if (j.contains("bs")) c.bs = detail::point_from(j.at("bs"));
    c.ue_clearance = j.value("ue_clearance_m", c.ue_clearance);
    c.bs_power_dbm = j.value("bs_power_dbm", c.bs_power_dbm);
    c.uav_power_dbm = j.value("uav_power_dbm", c.uav_power_dbm);
    c.user_bandwidth = j.value("user_bandwidth_hz", c.user_bandwidth);
    c.backhaul_bandwidth = j.value("backhaul_bandwidth_hz", c.backhaul_bandwidth);
    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed generator config: ") + e.what());
  }
}

inline json to_json(const GeneratorConfig& c) {
  return {{"area_x_m", c.area_x},         {"area_y_m", c.area_y},
          {"grid_x", c.grid_x},           {"grid_y", c.grid_y},
          {"density", c.density},         {"mean_height_m", c.mean_height},
          {"height_min_m", c.height_lo},  {"height_max_m", c.height_hi},
          {"num_users", c.num_users},     {"h_min_m", c.h_min},
          {"h_max_m", c.h_max},           {"bs", detail::point_json(c.bs)},
          {"ue_clearance_m", c.ue_clearance}, {"bs_power_dbm", c.bs_power_dbm},
          {"uav_power_dbm", c.uav_power_dbm}, {"user_bandwidth_hz", c.user_bandwidth},
          {"backhaul_bandwidth_hz", c.backhaul_bandwidth}};
}

}  // namespace uavrelay::scenario
