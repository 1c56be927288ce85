// Acceptance checks: one PASS/FAIL line per criterion. The exit status is
// nonzero only when a check could not be carried out.

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace uavrelay;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

template <class... Args>
std::string format(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool near_any_boundary(const Point& x, const std::vector<geometry::BlockedRegion>& regions, double eps) {
  for (const auto& r : regions)
    if (!r.empty() && std::abs(r.depth(x)) <= eps) return true;
  return false;
}

// 1 ---------------------------------------------------------------------------

void geometry_oracle() {
  const auto t0 = Clock::now();
  long checked = 0, disagree = 0, skipped = 0;
  for (int n = 0; n < 50; ++n) {
    const Scenario s = oracle::desk_scenario(scenario::trial_seed(101, n), 1 + n % 8);
    const auto all = geometry::build_regions(s);
    const auto kept = geometry::prune_redundant(all, s.bounds);
    const double eps = s.bounds.geo_epsilon();
    std::mt19937_64 rng(n);
    for (int i = 0; i < 10000; ++i) {
      // Half the points low, where shadows are dense.
      const Point x = oracle::random_point(rng, s.bounds, i % 2 ? s.bounds.h_max : s.bounds.h_min + 100.0);
      if (near_any_boundary(x, all, eps)) {
        ++skipped;
        continue;
      }
      ++checked;
      const bool expect = oracle::any_link_blocked(x, s);
      disagree += geometry::is_blocked(x, all, eps) != expect || geometry::is_blocked(x, kept, eps) != expect;
    }
  }
  const double t = seconds_since(t0);
  report(1, disagree == 0 && t < 60.0,
         format("%ld points, %ld disagreements, %ld in boundary band, %.1f s", checked, disagree, skipped, t));
}

// 2 ---------------------------------------------------------------------------

void big_m_equivalence() {
  long checked = 0, disagree = 0;
  for (int n = 0; n < 20; ++n) {
    const Scenario s = oracle::desk_scenario(scenario::trial_seed(202, n), 1 + n % 8);
    const auto regions = geometry::build_regions(s);
    const double c = geometry::big_m(regions, s.bounds);
    const double eps = s.bounds.geo_epsilon();
    std::mt19937_64 rng(1000 + n);
    for (int i = 0; i < 500; ++i) {
      const Point x = oracle::random_point(rng, s.bounds, i % 2 ? s.bounds.h_max : s.bounds.h_min + 100.0);
      if (near_any_boundary(x, regions, eps)) continue;
      for (const auto& r : regions) {
        const bool outside = !r.contains(x, eps);
        bool satisfiable = r.empty();
        const int J = r.size();
        for (int mask = 0; mask < (1 << J) && !satisfiable; ++mask) {
          if (__builtin_popcount(mask) > J - 1) continue;
          bool ok = true;
          for (int j = 0; j < J; ++j) ok = ok && r.halfspaces[j].eval(x) + c * ((mask >> j) & 1) >= 0.0;
          satisfiable = ok;
        }
        ++checked;
        disagree += outside != satisfiable;
      }
    }
  }
  report(2, disagree == 0, format("%ld (point, region) pairs, %ld disagreements", checked, disagree));
}

// 3 ---------------------------------------------------------------------------

// Largest common user rate reachable with total power pv, by bisection on the
// rate with each user's power found from the inverted capacity formula.
double best_user_rate(const Point& x, const Scenario& s, double pv) {
  const auto& c = s.channel;
  auto power_needed = [&](double r) {
    double sum = 0.0;
    for (const auto& u : s.ues) {
      const double g = c.los_gain * std::pow((x - u).norm(), -c.los_exponent) / (c.noise_psd * c.user_bandwidth);
      sum += std::expm1(r / c.user_bandwidth * std::numbers::ln2) / g;
    }
    return sum;
  };
  double lo = 0.0, hi = 1.0;
  while (power_needed(hi) <= pv) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (power_needed(mid) <= pv ? lo : hi) = mid;
  }
  return lo;
}

void power_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> dbm(0.0, 45.0);
  int worst_gap = 0, residual_bad = 0, unbound = 0;
  double max_rel_gap = 0.0;
  for (int n = 0; n < 100; ++n) {
    Scenario s = oracle::desk_scenario(scenario::trial_seed(303, n), 1 + n % 4);
    s.power = {dbm_to_watts(dbm(rng)), dbm_to_watts(dbm(rng))};
    const Point x = oracle::random_point(rng, s.bounds, s.bounds.h_max);
    const auto a = power::allocate(x, s);
    const double closed = oracle::min_capacity(x, a.bs, a.users, s, true);

    // 1000 x 1000 grid over (P_B, sum P_k).
    const int N = 1000;
    const auto& c = s.channel;
    std::vector<double> user_side(N + 1);
    for (int j = 0; j <= N; ++j) user_side[j] = best_user_rate(x, s, s.power.uav_total * j / N);
    double best = 0.0;
    for (int i = 0; i <= N; ++i) {
      const double pb = s.power.bs_total * i / N;
      const double rb = oracle::capacity((x - s.bs).norm(), pb, c.backhaul_bandwidth, c.los_exponent, c.los_gain,
                                         c.noise_psd) / s.num_users();
      for (int j = 0; j <= N; ++j) best = std::max(best, std::min(rb, user_side[j]));
    }
    const double gap = (best - closed) / best;
    max_rel_gap = std::max(max_rel_gap, gap);
    worst_gap += gap > 1e-6;

    std::vector<double> r;
    for (int k = 0; k < s.num_users(); ++k)
      r.push_back(channel::link_capacity(x, s.ues[k], a.users[k], s.channel.user_bandwidth, true, s.channel));
    const double lo = *std::min_element(r.begin(), r.end()), hi = *std::max_element(r.begin(), r.end());
    residual_bad += (hi - lo) > 1e-9 * lo;
    const bool bs_binds = std::abs(a.bs - s.power.bs_total) <= 1e-12 * s.power.bs_total;
    const bool uav_binds = std::abs(a.uav_total() - s.power.uav_total) <= 1e-9 * s.power.uav_total;
    unbound += !(bs_binds || uav_binds);
  }
  const double t = seconds_since(t0);
  report(3, worst_gap == 0 && residual_bad == 0 && unbound == 0 && t < 30.0,
         format("100 instances: %d below grid optimum (max rel gap %.2e), %d rate residuals, %d with no binding "
                "budget, %.1f s",
                worst_gap, max_rel_gap, residual_bad, unbound, t));
}

// 4 ---------------------------------------------------------------------------

void inner_monotonicity() {
  const lagrangian::Config cfg;
  long steps = 0, decreases = 0, overlong = 0;
  for (int n = 0; n < 20; ++n) {
    const Scenario s = oracle::desk_scenario(scenario::trial_seed(404, n), 1 + n % 8);
    lagrangian::IterationTrace tr;
    lagrangian::solve(s, cfg, &tr);
    for (size_t i = 1; i < tr.inner.size(); ++i) {
      const auto &prev = tr.inner[i - 1], &cur = tr.inner[i];
      if (cur.inner == 0) continue;  // a new inner loop starts
      ++steps;
      decreases += cur.q_upper < prev.q_upper - cfg.monotone_slack;
      overlong += cur.step > cur.radius * (1.0 + 1e-12);
    }
  }
  report(4, decreases == 0 && overlong == 0,
         format("20 scenarios, %ld inner steps, %ld decreases, %ld steps beyond the trust radius", steps, decreases,
                overlong));
}

// 5 to 8 ------------------------------------------------------------------------

struct Trial {
  int users = 0;
  double lr = 0.0, es3d = 0.0, es2d = 0.0, center = 0.0, free = 0.0;
  bool converged = false;
  bool no_open_point = false;  // every lattice point blocks some link
  long outer_checked = 0, bound_violations = 0;
  double worst_violation = 0.0;
};

bool has_open_point(const Scenario& s) {
  const auto& b = s.bounds;
  for (double z = b.h_min; z <= b.h_max; z += 2.5)
    for (double y = 0.0; y <= b.y_extent; y += 2.5)
      for (double x = 0.0; x <= b.x_extent; x += 2.5)
        if (!oracle::any_link_blocked(Point(x, y, z), s)) return true;
  return false;
}

std::vector<Trial> sweep_trials(double& elapsed) {
  const auto t0 = Clock::now();
  experiment::ExperimentSpec e;
  e.values = {1, 4, 8};
  e.trials = 50;
  e.seed = 1;
  e.es_spacing = 10.0;
  std::vector<Trial> out;
  for (double k : e.values)
    for (int t = 0; t < e.trials; ++t) {
      const Scenario s = scenario::generate(experiment::at_sweep_point(e, k), scenario::trial_seed(e.seed, t));
      Trial r;
      r.users = s.num_users();
      lagrangian::IterationTrace tr;
      const auto sol = lagrangian::solve(s, e.solver, &tr);
      r.lr = sol.rate;
      r.converged = sol.converged;
      for (const auto& o : tr.outer) {
        ++r.outer_checked;
        if (o.q_upper < o.q_lower) {
          ++r.bound_violations;
          r.worst_violation = std::max(r.worst_violation, o.q_lower - o.q_upper);
        }
      }
      if (r.bound_violations > 0) r.no_open_point = !has_open_point(s);
      r.es3d = baselines::es3d(s, e.es_spacing).rate;
      r.es2d = baselines::es2d(s, e.altitude, e.es_spacing).rate;
      r.center = baselines::center(s).rate;
      r.free = baselines::free(s, e.altitude, e.solver).rate;
      out.push_back(r);
    }
  elapsed = seconds_since(t0);
  return out;
}

void duality_bound(const std::vector<Trial>& trials) {
  long checked = 0, bad = 0, bad_trials = 0, closed = 0;
  double worst = 0.0;
  for (const auto& t : trials) {
    checked += t.outer_checked;
    bad += t.bound_violations;
    bad_trials += t.bound_violations > 0;
    closed += t.no_open_point;
    worst = std::max(worst, t.worst_violation);
  }
  report(5, bad == 0,
         format("%zu trials, %ld outer iterations, %ld with q_U < q_L in %ld trials (worst %.3g Mbps); %ld of those "
                "trials have no unblocked position on a 2.5 m lattice",
                trials.size(), checked, bad, bad_trials, worst, closed));
}

void convergence_rate(const std::vector<Trial>& trials) {
  int conv = 0;
  std::string per_k;
  for (int k : {1, 4, 8}) {
    int n = 0, c = 0;
    for (const auto& t : trials)
      if (t.users == k) {
        ++n;
        c += t.converged;
      }
    conv += c;
    per_k += format(" K=%d %d/%d", k, c, n);
  }
  const double rate = static_cast<double>(conv) / trials.size();
  report(6, rate >= 0.9, format("%.1f%% converged (%s)", 100.0 * rate, per_k.c_str() + 1));
}

void near_optimality(const std::vector<Trial>& trials, double elapsed) {
  std::vector<double> ratios;
  std::string detail;
  for (int k : {1, 4, 8}) {
    double lr = 0.0, es = 0.0;
    int n = 0;
    for (const auto& t : trials)
      if (t.users == k) {
        lr += t.lr;
        es += t.es3d;
        ++n;
      }
    ratios.push_back(lr / es);
    detail += format("K=%d %.4f (%d trials) ", k, lr / es, n);
  }
  const bool above = std::all_of(ratios.begin(), ratios.end(), [](double r) { return r >= 0.9; });
  const bool monotone = ratios[0] >= ratios[1] && ratios[1] >= ratios[2];
  report(7, above && monotone && elapsed < 900.0,
         format("mean LR / mean ES3D: %sdegradation %s, %.0f s", detail.c_str(), monotone ? "monotone" : "not monotone",
                elapsed));
}

void scheme_ordering(const std::vector<Trial>& trials) {
  bool means_ok = true;
  std::string detail;
  for (int k : {1, 4, 8}) {
    double lr = 0.0, ce = 0.0, fr = 0.0;
    int n = 0;
    for (const auto& t : trials)
      if (t.users == k) {
        lr += t.lr;
        ce += t.center;
        fr += t.free;
        ++n;
      }
    means_ok = means_ok && lr >= ce && lr >= fr;
    detail += format("K=%d LR %.2f CENTER %.2f FREE %.2f; ", k, lr / n / 1e6, ce / n / 1e6, fr / n / 1e6);
  }
  int beaten = 0, by_lr = 0;
  double worst = 0.0;
  for (const auto& t : trials) {
    const double best_other = std::max({t.lr, t.es2d, t.center, t.free});
    if (best_other > t.es3d) {
      ++beaten;
      by_lr += t.lr > t.es3d;
      worst = std::max(worst, (best_other - t.es3d) / t.es3d);
    }
  }
  report(8, means_ok && beaten == 0,
         format("%smeans %s; ES3D (10 m) beaten on %d of %zu instances, %d of them by LR (worst by %.2f%%)",
                detail.c_str(), means_ok ? "ordered" : "not ordered", beaten, trials.size(), by_lr, 100.0 * worst));
}

// 9 ---------------------------------------------------------------------------

void linearization() {
  std::mt19937_64 rng(909);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01;
  int slope_bad = 0;
  long points = 0, bound_bad = 0;
  double worst_slope = 0.0;
  for (int n = 0; n < 100; ++n) {
    const Scenario s = oracle::desk_scenario(scenario::trial_seed(909, n), 1 + n % 8);
    const Point x = oracle::random_point(rng, s.bounds, s.bounds.h_max);
    const auto a = power::allocate(x, s);
    const double rho = 50.0;
    const auto lin = sca::linearize(x, {}, a, s, rho);
    const auto& c = s.channel;
    auto rate = [&](double d, double p, double w) {
      return oracle::capacity(d, p, w, c.los_exponent, c.los_gain, c.noise_psd) / 1e6;
    };
    auto check_slope = [&](double slope, double d, double p, double w) {
      const double h = 1e-3 * d;
      const double fd = -(rate(d + h, p, w) - rate(d - h, p, w)) / (2 * h);
      const double rel = std::abs(slope - fd) / std::abs(fd);
      worst_slope = std::max(worst_slope, rel);
      slope_bad += rel > 1e-5;
    };
    for (int k = 0; k < s.num_users(); ++k) check_slope(lin.b[k], lin.dist[k], a.users[k], c.user_bandwidth);
    check_slope(lin.b_bs, lin.dist_bs, a.bs, c.backhaul_bandwidth);
    for (int i = 0; i < 1000; ++i) {
      const Point dir(n01(rng), n01(rng), n01(rng));
      const Point y = x + dir.normalized() * rho * std::cbrt(u01(rng));
      ++points;
      bool ok = lin.backhaul_bound(y, s.bs) <= rate((y - s.bs).norm(), a.bs, c.backhaul_bandwidth) + 1e-12;
      for (int k = 0; k < s.num_users(); ++k)
        ok = ok && lin.user_bound(k, y, s.ues[k]) <= rate((y - s.ues[k]).norm(), a.users[k], c.user_bandwidth) + 1e-12;
      bound_bad += !ok;
    }
  }
  report(9, slope_bad == 0 && bound_bad == 0,
         format("100 anchors: %d slopes off (worst rel %.2e), %ld of %ld sampled points above the true rate",
                slope_bad, worst_slope, bound_bad, points));
}

// 10 --------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  experiment::ExperimentSpec e;
  e.values = {2, 5};
  e.trials = 3;
  e.seed = 10;
  e.es_spacing = 25.0;
  const auto base = fs::temp_directory_path() / "uavrelay_acceptance";
  fs::remove_all(base);
  bool same = true;
  for (int parallel : {1, 2}) {
    experiment::RunOptions o;
    o.out_dir = base / std::to_string(parallel);
    o.parallel = parallel;
    o.quiet = true;
    experiment::run(e, o);
  }
  for (const char* f : {"trials.csv", "summary.csv"}) same = same && slurp(base / "1" / f) == slurp(base / "2" / f);
  const auto bytes = slurp(base / "1" / "trials.csv").size();
  fs::remove_all(base);
  report(10, same, format("two runs of a 5-scheme spec, %zu-byte trials.csv, %s", bytes, same ? "identical" : "differ"));
}

}  // namespace

int main() {
  try {
    geometry_oracle();
    big_m_equivalence();
    power_optimality();
    inner_monotonicity();
    double elapsed = 0.0;
    const auto trials = sweep_trials(elapsed);
    duality_bound(trials);
    convergence_rate(trials);
    near_optimality(trials, elapsed);
    scheme_ordering(trials);
    linearization();
    determinism();
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "acceptance: %s\n", ex.what());
    return 2;
  }
  std::printf("%d of 10 criteria failed\n", failures);
  return 0;
}
