#pragma once

// Two-loop solver for joint positioning and power allocation.
//
// The inner loop alternates the closed-form power allocation with the SCA
// positioning subproblem for fixed multipliers. The outer loop moves the
// multipliers along the subgradient of the relaxed binary constraints until the
// relaxed objective q_U meets the feasible objective q_L.

#include <uavrelay/channel.hpp>
#include <uavrelay/core.hpp>
#include <uavrelay/geometry.hpp>
#include <uavrelay/power.hpp>
#include <uavrelay/sca.hpp>

#include <limits>
#include <optional>
#include <string>
#include <span>
#include <vector>

namespace uavrelay::lagrangian {

struct Config {
  double inner_tolerance = 0.01;  // eps_t, Mbps
  double outer_tolerance = 0.01;  // eps_T, Mbps
  int max_inner = 30;
  int max_outer = 10;
  double kappa = 0.9;
  double rho0 = 50.0;  // m
  double lambda0 = 1.0;
  double mu0 = 2.0;
  double monotone_slack = 1e-8;  // Mbps
  double decrease_slack = 1e-9;  // Mbps
  double fallback_step = 1.0;    // m
  double fallback_lattice = 5.0; // m, only used when the centre column is blocked
  bool prune = true;
  conic::Settings solver;
};

using Binaries = std::vector<std::vector<double>>;

struct LagrangianState {
  std::vector<double> lambda;
  Binaries l;
  Point x = Point::Zero();
  double mu = 2.0;
  int outer = 0;
  int inner = 0;
};

struct InnerStep {
  int outer = 0;
  int inner = 0;
  Point x = Point::Zero();
  double q_upper = 0.0;  // Mbps
  double rate = 0.0;     // Mbps, LoS min-capacity with refreshed powers
  double penalty = 0.0;  // Mbps
  double rho = 0.0;
  double step = 0.0;     // ||x^(t) - x^(t-1)||
  double radius = 0.0;   // trust radius that bounded the step
};

struct OuterStep {
  int outer = 0;
  Point x = Point::Zero();
  double q_upper = 0.0;  // Mbps
  double q_lower = 0.0;  // Mbps
  double lambda_norm = 0.0;
  double lambda_max = 0.0;
  double mu = 0.0;
  int inner_iterations = 0;
  bool blocked = false;
};

struct IterationTrace {
  std::vector<InnerStep> inner;
  std::vector<OuterStep> outer;
  std::vector<std::string> events;
};

struct Solution {
  Point x = Point::Zero();
  double bs_power = 0.0;
  std::vector<double> user_powers;
  double rate = 0.0;  // bit/s, actual environment
  bool feasible = false;
  bool converged = false;
  bool used_fallback = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
};

struct InnerResult {
  Point x = Point::Zero();
  Binaries l;
  power::PowerAllocation alloc;
  double q_upper = 0.0;
  double rate = 0.0;
  int iterations = 0;
};

/// Everything the loops need that is fixed for a scenario.
struct Problem {
  const Scenario* scenario = nullptr;
  std::vector<geometry::BlockedRegion> all_regions;
  std::vector<geometry::BlockedRegion> regions;  // after pruning
  double big_m = 0.0;
  double geo_eps = 0.0;
  double constraint_eps = 0.0;

  static Problem build(const Scenario& s, bool prune = true) {
    Problem p;
    p.scenario = &s;
    p.all_regions = geometry::build_regions(s);
    p.regions = prune ? geometry::prune_redundant(p.all_regions, s.bounds) : p.all_regions;
    p.big_m = geometry::big_m(p.regions, s.bounds);
    p.geo_eps = s.bounds.geo_epsilon();
    p.constraint_eps = 2.0 * p.geo_eps;
    return p;
  }
};

inline double penalty(std::span<const double> lambda, const Binaries& l) {
  double v = 0.0;
  for (size_t i = 0; i < l.size(); ++i)
    for (double lij : l[i]) v += lambda[i] * lij * (1.0 - lij);
  return v;
}

/// LoS min-capacity (Mbps) at x with the closed-form powers.
inline double los_rate_mbps(const Point& x, const power::PowerAllocation& a, const Scenario& s) {
  return channel::min_capacity_los(x, a.bs, a.users, s) / sca::kMbps;
}

/// Feasible objective (bit/s): zero when x lies in a blocked region, the LoS
/// min-capacity with closed-form powers otherwise.
inline double evaluate_q_lower(const Point& x, const Scenario& s, const std::vector<geometry::BlockedRegion>& regions,
                               double eps) {
  if (geometry::is_blocked(x, regions, eps)) return 0.0;
  const auto a = power::allocate(x, s);
  return channel::min_capacity_los(x, a.bs, a.users, s);
}

inline void project_step(Point& x, const Point& anchor, double rho, const AreaBounds& bounds) {
  const double d = (x - anchor).norm();
  if (d > rho) x = anchor + (x - anchor) * (rho / d);
  x = bounds.clamp(x);
}

/// Binary assignment valid at x: the plane with the largest margin is enforced,
/// every other plane relaxed.
inline Binaries round_binaries(const Point& x, const std::vector<geometry::BlockedRegion>& regions) {
  Binaries l(regions.size());
  for (size_t i = 0; i < regions.size(); ++i) {
    const auto& r = regions[i];
    l[i].assign(r.size(), 1.0);
    int best = 0;
    for (int j = 1; j < r.size(); ++j)
      if (r.halfspaces[j].eval(x) > r.halfspaces[best].eval(x)) best = j;
    l[i][best] = 0.0;
  }
  return l;
}

/// Alternating power allocation and SCA positioning from (x, l).
/// `fixed` freezes the binaries and enforces the listed planes instead.
inline InnerResult inner_loop(const Problem& prob, std::span<const double> lambda, Point x, Binaries l,
                              const Config& cfg, int outer_index, IterationTrace* trace,
                              const std::optional<std::vector<sca::FixedPlane>>& fixed = std::nullopt,
                              std::optional<double> altitude = std::nullopt) {
  const Scenario& s = *prob.scenario;
  const bool relaxed = !fixed.has_value();
  sca::SubproblemOptions opt;
  opt.constraint_eps = prob.constraint_eps;
  opt.fixed_altitude = altitude;
  opt.fixed_planes = fixed;
  opt.solver = cfg.solver;

  InnerResult res;
  res.alloc = power::allocate(x, s);
  double rate = los_rate_mbps(x, res.alloc, s);
  double pen = relaxed ? penalty(lambda, l) : 0.0;
  double q = rate - pen;
  double rho = cfg.rho0;
  if (trace) trace->inner.push_back({outer_index, 0, x, q, rate, pen, rho, 0.0, 0.0});

  int t = 0;
  while (t < cfg.max_inner) {
    const auto lin = sca::linearize(x, relaxed ? l : Binaries{}, res.alloc, s, rho);
    const auto sol = sca::solve_subproblem(lin, lambda, prob.regions, s, prob.big_m, opt);
    if (sol.status == conic::Status::Infeasible) {
      if (trace) trace->events.push_back("subproblem infeasible; inner loop stopped at the anchor");
      break;
    }
    Point xn = sol.x;
    project_step(xn, x, rho, s.bounds);
    Binaries ln = sol.l;
    for (auto& v : ln)
      for (auto& e : v) e = std::clamp(e, 0.0, 1.0);
    const auto alloc = power::allocate(xn, s);
    const double rate_n = los_rate_mbps(xn, alloc, s);
    const double pen_n = relaxed ? penalty(lambda, ln) : 0.0;
    const double qn = rate_n - pen_n;
    if (qn < q - cfg.monotone_slack) {
      if (trace) trace->events.push_back("subproblem step decreased the objective; inner loop stopped at the anchor");
      break;
    }
    ++t;
    const double step = (xn - x).norm();
    if (trace) trace->inner.push_back({outer_index, t, xn, qn, rate_n, pen_n, rho * cfg.kappa, step, rho});
    const double gain = qn - q;
    x = xn;
    l = std::move(ln);
    res.alloc = alloc;
    rate = rate_n;
    q = qn;
    rho *= cfg.kappa;
    if (gain < cfg.inner_tolerance) break;
  }
  res.x = x;
  res.l = std::move(l);
  res.q_upper = q;
  res.rate = rate;
  res.iterations = t;
  return res;
}

/// Subgradient multiplier step; returns false when the subgradient vanishes.
inline bool update_multipliers(std::vector<double>& lambda, const Binaries& l, double q_upper, double q_lower,
                               double mu) {
  std::vector<double> g(l.size(), 0.0);
  double denom = 0.0;
  for (size_t i = 0; i < l.size(); ++i) {
    for (double v : l[i]) g[i] += v * (1.0 - v);
    denom += g[i] * g[i];
  }
  if (!(denom > 0.0)) return false;
  const double gamma = mu * (q_upper - q_lower) / denom;
  for (size_t i = 0; i < l.size(); ++i) lambda[i] = std::max(0.0, lambda[i] + gamma * g[i]);
  return true;
}

inline Binaries initial_binaries(const std::vector<geometry::BlockedRegion>& regions) {
  Binaries l(regions.size());
  for (size_t i = 0; i < regions.size(); ++i) {
    const int J = regions[i].size();
    l[i].assign(J, (J - 1.0) / J);
  }
  return l;
}

/// Lowest unblocked point above the area centre in `step` increments; when the
/// whole column is blocked, the unblocked lattice point nearest to the centre.
/// Empty when no lattice point is unblocked.
inline std::optional<Point> fallback_point(const Problem& prob, const Config& cfg) {
  const auto& b = prob.scenario->bounds;
  const double eps = prob.constraint_eps;
  const Point centre(0.5 * b.x_extent, 0.5 * b.y_extent, b.h_min);
  for (double h = b.h_min; h <= b.h_max + 1e-9; h += cfg.fallback_step) {
    const Point x(centre.x(), centre.y(), std::min(h, b.h_max));
    if (!geometry::is_blocked(x, prob.regions, eps)) return x;
  }
  std::optional<Point> best;
  double best_d = std::numeric_limits<double>::infinity();
  const double st = cfg.fallback_lattice;
  for (double z = b.h_min; z <= b.h_max + 1e-9; z += st)
    for (double y = 0.0; y <= b.y_extent + 1e-9; y += st)
      for (double x = 0.0; x <= b.x_extent + 1e-9; x += st) {
        const Point p(x, y, z);
        const double d = (p - centre).norm();
        if (d < best_d && !geometry::is_blocked(p, prob.regions, eps)) {
          best_d = d;
          best = p;
        }
      }
  return best;
}

inline Solution finish(const Problem& prob, const Point& x) {
  const Scenario& s = *prob.scenario;
  Solution out;
  out.x = x;
  const auto a = power::allocate(x, s);
  out.bs_power = a.bs;
  out.user_powers = a.users;
  out.rate = channel::min_capacity_actual(x, a.bs, a.users, s);
  out.feasible = !geometry::is_blocked(x, prob.all_regions, prob.geo_eps);
  return out;
}

inline Solution solve(const Scenario& s, const Config& cfg = {}, IterationTrace* trace = nullptr) {
  validate(s);
  const Problem prob = Problem::build(s, cfg.prune);
  const auto& regions = prob.regions;

  LagrangianState st;
  st.lambda.assign(regions.size(), cfg.lambda0);
  st.l = initial_binaries(regions);
  st.x = Point(0.5 * s.bounds.x_extent, 0.5 * s.bounds.y_extent, s.bounds.h_max);
  st.mu = cfg.mu0;

  double prev_q = std::numeric_limits<double>::infinity();
  bool converged = false;
  while (st.outer < cfg.max_outer) {
    ++st.outer;
    auto in = inner_loop(prob, st.lambda, st.x, st.l, cfg, st.outer, trace);
    st.inner += in.iterations;
    st.x = in.x;
    st.l = std::move(in.l);

    double q_upper = in.q_upper;
    double q_lower = 0.0;
    const bool blocked = geometry::is_blocked(st.x, regions, prob.constraint_eps);
    if (!blocked) {
      // The binaries can be rounded at an unblocked point without violating any
      // constraint, which removes the penalty.
      st.l = round_binaries(st.x, regions);
      q_upper = in.rate;
      q_lower = in.rate;
    }
    if (trace) {
      double norm = 0.0, mx = 0.0;
      for (double v : st.lambda) {
        norm += v * v;
        mx = std::max(mx, v);
      }
      trace->outer.push_back({st.outer, st.x, q_upper, q_lower, std::sqrt(norm), mx, st.mu, in.iterations, blocked});
    }
    // A small gap at a blocked point ends the loop too, but only as a failure.
    if (q_upper - q_lower < cfg.outer_tolerance) {
      converged = !blocked;
      break;
    }
    if (st.outer > 1 && !(q_upper < prev_q - cfg.decrease_slack)) st.mu *= 0.5;
    prev_q = q_upper;
    update_multipliers(st.lambda, st.l, q_upper, q_lower, st.mu);
  }

  if (converged) {
    Solution out = finish(prob, st.x);
    out.converged = true;
    out.outer_iterations = st.outer;
    out.inner_iterations = st.inner;
    return out;
  }

  if (trace) trace->events.push_back("outer loop did not converge; running the fallback");
  const auto found = fallback_point(prob, cfg);
  if (!found) {
    // Every link-blocking shadow together covers the whole region.
    if (trace) trace->events.push_back("no unblocked point found; returning the area centre at h_max");
    Solution out = finish(prob, Point(0.5 * s.bounds.x_extent, 0.5 * s.bounds.y_extent, s.bounds.h_max));
    out.used_fallback = true;
    out.outer_iterations = st.outer;
    out.inner_iterations = st.inner;
    return out;
  }
  const Point start = *found;
  const Binaries frozen = round_binaries(start, regions);
  std::vector<sca::FixedPlane> planes;
  for (size_t i = 0; i < frozen.size(); ++i)
    for (size_t j = 0; j < frozen[i].size(); ++j)
      if (frozen[i][j] == 0.0) planes.push_back({static_cast<int>(i), static_cast<int>(j)});
  const auto in = inner_loop(prob, {}, start, {}, cfg, st.outer + 1, trace, planes);
  Solution out = finish(prob, in.x);
  out.used_fallback = true;
  out.outer_iterations = st.outer;
  out.inner_iterations = st.inner + in.iterations;
  return out;
}

}  // namespace uavrelay::lagrangian
