#pragma once

// Monte-Carlo experiment runner: parameter sweeps over generated scenarios,
// every scheme per trial, CSV export with resume support.
//
// trials.csv is a pure function of the spec (rows sorted, doubles printed with
// 17 significant digits); wall-clock times go to timings.csv.

#include <uavrelay/baselines.hpp>
#include <uavrelay/lagrangian.hpp>
#include <uavrelay/scenario.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace uavrelay::experiment {

enum class SweepVariable { NumUsers, BsPower, UavPower, Density };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::NumUsers: return "num_users";
    case SweepVariable::BsPower: return "bs_power_dbm";
    case SweepVariable::UavPower: return "uav_power_dbm";
    case SweepVariable::Density: return "density";
  }
  return "?";
}

inline SweepVariable parse_sweep_variable(const std::string& s) {
  if (s == "num_users" || s == "K") return SweepVariable::NumUsers;
  if (s == "bs_power_dbm" || s == "P_B") return SweepVariable::BsPower;
  if (s == "uav_power_dbm" || s == "P_V") return SweepVariable::UavPower;
  if (s == "density") return SweepVariable::Density;
  throw ConfigError("unknown sweep variable '" + s + "'");
}

inline const std::vector<std::string>& known_schemes() {
  static const std::vector<std::string> v{"lr", "es3d", "es2d", "center", "free"};
  return v;
}

struct ExperimentSpec {
  scenario::GeneratorConfig generator;
  std::vector<std::string> schemes{"lr", "es3d", "es2d", "center", "free"};
  SweepVariable sweep = SweepVariable::NumUsers;
  std::vector<double> values{1, 4, 8};
  int trials = 25;
  std::uint64_t seed = 1;
  double es_spacing = 10.0;  // m
  double altitude = 100.0;   // m, for es2d and free
  lagrangian::Config solver;
};

inline void validate(const ExperimentSpec& e) {
  if (e.trials < 1) throw ConfigError("trials must be at least 1");
  if (e.values.empty()) throw ConfigError("sweep values must be nonempty");
  if (e.schemes.empty()) throw ConfigError("no schemes selected");
  for (const auto& s : e.schemes)
    if (std::find(known_schemes().begin(), known_schemes().end(), s) == known_schemes().end())
      throw ConfigError("unknown scheme '" + s + "'");
  if (!(e.es_spacing > 0.0)) throw ConfigError("es_spacing_m must be positive");
}

inline ExperimentSpec spec_from_json(const scenario::json& j) {
  try {
    ExperimentSpec e;
    if (j.contains("generator")) e.generator = scenario::config_from_json(j.at("generator"));
    if (j.contains("schemes")) e.schemes = j.at("schemes").get<std::vector<std::string>>();
    if (j.contains("sweep")) {
      e.sweep = parse_sweep_variable(j.at("sweep").at("variable").get<std::string>());
      e.values = j.at("sweep").at("values").get<std::vector<double>>();
    }
    e.trials = j.value("trials", e.trials);
    e.seed = j.value("seed", e.seed);
    e.es_spacing = j.value("es_spacing_m", e.es_spacing);
    e.altitude = j.value("altitude_m", e.altitude);
    validate(e);
    return e;
  } catch (const scenario::json::exception& ex) {
    throw ConfigError(std::string("malformed experiment spec: ") + ex.what());
  }
}

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  scenario::json j;
  try {
    in >> j;
  } catch (const scenario::json::exception& ex) {
    throw ConfigError("malformed spec file " + path + ": " + ex.what());
  }
  return spec_from_json(j);
}

/// Generator configuration at one sweep point.
inline scenario::GeneratorConfig at_sweep_point(const ExperimentSpec& e, double value) {
  auto g = e.generator;
  switch (e.sweep) {
    case SweepVariable::NumUsers: g.num_users = static_cast<int>(std::lround(value)); break;
    case SweepVariable::BsPower: g.bs_power_dbm = value; break;
    case SweepVariable::UavPower: g.uav_power_dbm = value; break;
    case SweepVariable::Density: g.density = value; break;
  }
  return g;
}

struct TrialReport {
  int sweep_index = 0;
  double sweep_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string scheme;
  double capacity_mbps = 0.0;
  bool converged = true;
  bool feasible = true;
  bool used_fallback = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  Point x = Point::Zero();
  double bs_power = 0.0;
  double uav_power = 0.0;
  double wall_time = 0.0;  // s, not part of trials.csv
};

/// Runs every selected scheme on one generated scenario.
inline std::vector<TrialReport> run_trial(const ExperimentSpec& e, int sweep_index, int trial) {
  const double value = e.values[sweep_index];
  const std::uint64_t seed = scenario::trial_seed(e.seed, static_cast<std::uint64_t>(trial));
  const Scenario s = scenario::generate(at_sweep_point(e, value), seed);
  const auto regions = geometry::build_regions(s);
  const double eps = s.bounds.geo_epsilon();

  std::vector<TrialReport> out;
  for (const auto& name : e.schemes) {
    TrialReport r;
    r.sweep_index = sweep_index;
    r.sweep_value = value;
    r.trial = trial;
    r.seed = seed;
    r.scheme = name;
    const auto t0 = std::chrono::steady_clock::now();
    if (name == "lr") {
      const auto sol = lagrangian::solve(s, e.solver);
      r.capacity_mbps = sol.rate / 1e6;
      r.converged = sol.converged;
      r.feasible = sol.feasible;
      r.used_fallback = sol.used_fallback;
      r.outer_iterations = sol.outer_iterations;
      r.inner_iterations = sol.inner_iterations;
      r.x = sol.x;
      r.bs_power = sol.bs_power;
      for (double p : sol.user_powers) r.uav_power += p;
    } else {
      baselines::BaselineResult b;
      if (name == "es3d") b = baselines::es3d(s, e.es_spacing);
      else if (name == "es2d") b = baselines::es2d(s, e.altitude, e.es_spacing);
      else if (name == "center") b = baselines::center(s);
      else b = baselines::free(s, e.altitude, e.solver);
      r.capacity_mbps = b.rate / 1e6;
      r.feasible = !geometry::is_blocked(b.x, regions, eps);
      r.x = b.x;
      r.bs_power = b.allocation.bs;
      r.uav_power = b.allocation.uav_total();
    }
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

// CSV ----------------------------------------------------------------------

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* trials_header() {
  return "sweep_variable,sweep_value,trial,seed,scheme,min_capacity_mbps,converged,feasible,used_fallback,"
         "outer_iterations,inner_iterations,x_m,y_m,z_m,bs_power_w,uav_power_w";
}

inline std::string trial_row(const ExperimentSpec& e, const TrialReport& r) {
  std::ostringstream o;
  o << to_string(e.sweep) << ',' << fmt(r.sweep_value) << ',' << r.trial << ',' << r.seed << ',' << r.scheme << ','
    << fmt(r.capacity_mbps) << ',' << r.converged << ',' << r.feasible << ',' << r.used_fallback << ','
    << r.outer_iterations << ',' << r.inner_iterations << ',' << fmt(r.x.x()) << ',' << fmt(r.x.y()) << ','
    << fmt(r.x.z()) << ',' << fmt(r.bs_power) << ',' << fmt(r.uav_power);
  return o.str();
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) f.push_back(item);
  return f;
}

/// Parses a trials.csv row back into a report; the sweep index is recovered from the spec.
inline std::optional<TrialReport> parse_trial_row(const ExperimentSpec& e, const std::string& line) {
  const auto f = split(line);
  if (f.size() != 16 || f[0] != to_string(e.sweep)) return std::nullopt;
  try {
    TrialReport r;
    r.sweep_value = std::stod(f[1]);
    const auto it = std::find(e.values.begin(), e.values.end(), r.sweep_value);
    if (it == e.values.end()) return std::nullopt;
    r.sweep_index = static_cast<int>(it - e.values.begin());
    r.trial = std::stoi(f[2]);
    r.seed = std::stoull(f[3]);
    r.scheme = f[4];
    r.capacity_mbps = std::stod(f[5]);
    r.converged = f[6] == "1";
    r.feasible = f[7] == "1";
    r.used_fallback = f[8] == "1";
    r.outer_iterations = std::stoi(f[9]);
    r.inner_iterations = std::stoi(f[10]);
    r.x = Point(std::stod(f[11]), std::stod(f[12]), std::stod(f[13]));
    r.bs_power = std::stod(f[14]);
    r.uav_power = std::stod(f[15]);
    if (r.trial < 0 || r.trial >= e.trials) return std::nullopt;
    if (r.seed != scenario::trial_seed(e.seed, static_cast<std::uint64_t>(r.trial))) return std::nullopt;
    return r;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

struct SummaryRow {
  double sweep_value = 0.0;
  std::string scheme;
  int trials = 0;
  double mean_capacity_mbps = 0.0;
  double convergence_rate = 0.0;
  double feasible_rate = 0.0;
};

/// Arithmetic means per (sweep value, scheme), in spec order.
inline std::vector<SummaryRow> summarize(const ExperimentSpec& e, const std::vector<TrialReport>& reports) {
  std::vector<SummaryRow> out;
  for (size_t v = 0; v < e.values.size(); ++v)
    for (const auto& name : e.schemes) {
      SummaryRow row;
      row.sweep_value = e.values[v];
      row.scheme = name;
      double cap = 0.0, conv = 0.0, feas = 0.0;
      for (const auto& r : reports)
        if (r.sweep_index == static_cast<int>(v) && r.scheme == name) {
          ++row.trials;
          cap += r.capacity_mbps;
          conv += r.converged;
          feas += r.feasible;
        }
      if (row.trials > 0) {
        row.mean_capacity_mbps = cap / row.trials;
        row.convergence_rate = conv / row.trials;
        row.feasible_rate = feas / row.trials;
      }
      out.push_back(row);
    }
  return out;
}

struct RunOptions {
  std::filesystem::path out_dir;
  int parallel = 1;
  bool resume = true;
  bool quiet = false;
};

struct RunResult {
  std::vector<TrialReport> reports;  // sorted
  std::vector<SummaryRow> summary;
  std::vector<std::string> errors;
  int resumed_trials = 0;
};

inline int scheme_rank(const ExperimentSpec& e, const std::string& name) {
  return static_cast<int>(std::find(e.schemes.begin(), e.schemes.end(), name) - e.schemes.begin());
}

inline void sort_reports(const ExperimentSpec& e, std::vector<TrialReport>& v) {
  std::sort(v.begin(), v.end(), [&](const TrialReport& a, const TrialReport& b) {
    if (a.sweep_index != b.sweep_index) return a.sweep_index < b.sweep_index;
    if (a.trial != b.trial) return a.trial < b.trial;
    return scheme_rank(e, a.scheme) < scheme_rank(e, b.scheme);
  });
}

inline void write_outputs(const ExperimentSpec& e, const RunOptions& opt, const RunResult& res) {
  {
    std::ofstream f(opt.out_dir / "trials.csv");
    f << trials_header() << '\n';
    for (const auto& r : res.reports) f << trial_row(e, r) << '\n';
    if (!f) throw Error("failed writing trials.csv");
  }
  {
    std::ofstream f(opt.out_dir / "summary.csv");
    f << "sweep_variable,sweep_value,scheme,trials,mean_min_capacity_mbps,convergence_rate,feasible_rate\n";
    for (const auto& s : res.summary)
      f << to_string(e.sweep) << ',' << fmt(s.sweep_value) << ',' << s.scheme << ',' << s.trials << ','
        << fmt(s.mean_capacity_mbps) << ',' << fmt(s.convergence_rate) << ',' << fmt(s.feasible_rate) << '\n';
    if (!f) throw Error("failed writing summary.csv");
  }
}

/// Runs the experiment, writing trials.csv, summary.csv and timings.csv into
/// opt.out_dir. Completed trials found in an existing trials.csv are reused.
inline RunResult run(const ExperimentSpec& e, const RunOptions& opt) {
  validate(e);
  std::filesystem::create_directories(opt.out_dir);
  const auto trials_path = opt.out_dir / "trials.csv";

  RunResult res;
  std::map<std::pair<int, int>, std::vector<TrialReport>> done;
  if (opt.resume && std::filesystem::exists(trials_path)) {
    std::ifstream in(trials_path);
    std::string line;
    if (std::getline(in, line) && line == trials_header())
      while (std::getline(in, line))
        if (auto r = parse_trial_row(e, line)) done[{r->sweep_index, r->trial}].push_back(*r);
    // A trial counts as done only when every scheme is present.
    for (auto it = done.begin(); it != done.end();) {
      bool complete = it->second.size() == e.schemes.size();
      for (const auto& name : e.schemes) {
        int n = 0;
        for (const auto& r : it->second) n += r.scheme == name;
        complete = complete && n == 1;
      }
      it = complete ? std::next(it) : done.erase(it);
    }
  }

  std::vector<std::pair<int, int>> todo;
  for (int v = 0; v < static_cast<int>(e.values.size()); ++v)
    for (int t = 0; t < e.trials; ++t)
      if (!done.count({v, t})) todo.emplace_back(v, t);
  res.resumed_trials = static_cast<int>(done.size());
  for (auto& [key, rows] : done)
    for (auto& r : rows) res.reports.push_back(std::move(r));

  // Partial results are appended as trials finish so an interrupted run can resume.
  std::ofstream partial;
  {
    std::vector<TrialReport> kept = res.reports;
    sort_reports(e, kept);
    partial.open(trials_path, std::ios::trunc);
    partial << trials_header() << '\n';
    for (const auto& r : kept) partial << trial_row(e, r) << '\n';
    partial.flush();
  }

  std::mutex mu;
  std::atomic<size_t> next{0};
  std::vector<TrialReport> fresh;
  auto worker = [&] {
    for (size_t i = next++; i < todo.size(); i = next++) {
      const auto [v, t] = todo[i];
      try {
        auto rows = run_trial(e, v, t);
        std::lock_guard lock(mu);
        for (const auto& r : rows) partial << trial_row(e, r) << '\n';
        partial.flush();
        if (!opt.quiet)
          std::fprintf(stderr, "%s=%s trial %d done\n", to_string(e.sweep), fmt(e.values[v]).c_str(), t);
        for (auto& r : rows) fresh.push_back(std::move(r));
      } catch (const std::exception& ex) {
        std::lock_guard lock(mu);
        res.errors.push_back(std::string(to_string(e.sweep)) + "=" + fmt(e.values[v]) + " trial " +
                             std::to_string(t) + ": " + ex.what());
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(opt.parallel, static_cast<int>(todo.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  partial.close();

  {
    std::vector<TrialReport> timed = fresh;
    sort_reports(e, timed);
    std::ofstream f(opt.out_dir / "timings.csv");
    f << "sweep_value,trial,scheme,wall_time_s\n";
    for (const auto& r : timed) f << fmt(r.sweep_value) << ',' << r.trial << ',' << r.scheme << ',' << fmt(r.wall_time) << '\n';
  }

  for (auto& r : fresh) res.reports.push_back(std::move(r));
  sort_reports(e, res.reports);
  res.summary = summarize(e, res.reports);
  std::sort(res.errors.begin(), res.errors.end());
  write_outputs(e, opt, res);
  return res;
}

// Trace ---------------------------------------------------------------------

/// Solves one scenario and writes trace.csv (inner iterations), outer.csv and
/// path.csv (the accepted UAV positions, then the returned solution).
inline lagrangian::Solution trace(const Scenario& s, const std::filesystem::path& out_dir,
                                  const lagrangian::Config& cfg = {}, lagrangian::IterationTrace* keep = nullptr) {
  std::filesystem::create_directories(out_dir);
  lagrangian::IterationTrace tr;
  const auto sol = lagrangian::solve(s, cfg, &tr);
  {
    std::ofstream f(out_dir / "trace.csv");
    f << "outer,inner,x_m,y_m,z_m,q_upper_mbps,rate_mbps,penalty_mbps,rho_m,step_m,radius_m\n";
    for (const auto& r : tr.inner)
      f << r.outer << ',' << r.inner << ',' << fmt(r.x.x()) << ',' << fmt(r.x.y()) << ',' << fmt(r.x.z()) << ','
        << fmt(r.q_upper) << ',' << fmt(r.rate) << ',' << fmt(r.penalty) << ',' << fmt(r.rho) << ',' << fmt(r.step)
        << ',' << fmt(r.radius) << '\n';
  }
  {
    std::ofstream f(out_dir / "outer.csv");
    f << "outer,x_m,y_m,z_m,q_upper_mbps,q_lower_mbps,lambda_norm,lambda_max,mu,inner_iterations,blocked\n";
    for (const auto& r : tr.outer)
      f << r.outer << ',' << fmt(r.x.x()) << ',' << fmt(r.x.y()) << ',' << fmt(r.x.z()) << ',' << fmt(r.q_upper)
        << ',' << fmt(r.q_lower) << ',' << fmt(r.lambda_norm) << ',' << fmt(r.lambda_max) << ',' << fmt(r.mu) << ','
        << r.inner_iterations << ',' << r.blocked << '\n';
  }
  {
    std::ofstream f(out_dir / "path.csv");
    f << "index,x_m,y_m,z_m\n";
    int i = 0;
    for (const auto& r : tr.inner) f << i++ << ',' << fmt(r.x.x()) << ',' << fmt(r.x.y()) << ',' << fmt(r.x.z()) << '\n';
    f << i << ',' << fmt(sol.x.x()) << ',' << fmt(sol.x.y()) << ',' << fmt(sol.x.z()) << '\n';
  }
  if (keep) *keep = std::move(tr);
  return sol;
}

}  // namespace uavrelay::experiment
