#pragma once

// Trust-region convex positioning subproblem for fixed transmit powers.
//
// Rates inside the optimiser are in Mbps so that R, the blockage rows and the
// penalty weights live on comparable scales. The concave Taylor lower bounds of
// the user and backhaul rates become second-order cones
//
//     || x - x_k || <= (A_k + B_k d_k - R) / B_k,
//
// and the relaxed binaries l_ij of each blocked region form one variable group
// of the cone program.

#include <uavrelay/conic.hpp>
#include <uavrelay/core.hpp>
#include <uavrelay/geometry.hpp>
#include <uavrelay/power.hpp>

#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace uavrelay::sca {

inline constexpr double kMbps = 1e6;

struct SubproblemLinearization {
  std::vector<double> a, b, zeta;  // per user: A_k (Mbps), B_k (Mbps/m), zeta_k
  double a_bs = 0.0, b_bs = 0.0, zeta_bs = 0.0;
  std::vector<double> dist;  // ||x_t - x_k||
  double dist_bs = 0.0;
  Point anchor = Point::Zero();
  std::vector<std::vector<double>> l_anchor;  // one vector per region
  double rho = 0.0;

  /// Lower bound on the rate of user k (Mbps) at x.
  double user_bound(int k, const Point& x, const Point& ue) const { return a[k] - b[k] * ((x - ue).norm() - dist[k]); }
  double backhaul_bound(const Point& x, const Point& bs) const { return a_bs - b_bs * ((x - bs).norm() - dist_bs); }
};

/// Value and slope in the distance of W log2(1 + zeta / d^alpha), in Mbps.
inline std::pair<double, double> rate_and_slope(double d, double zeta, double bandwidth, double alpha) {
  const double da = std::pow(d, alpha);
  const double value = bandwidth * std::log1p(zeta / da) / std::numbers::ln2 / kMbps;
  const double slope = bandwidth * zeta * alpha / (d * (da + zeta) * std::numbers::ln2) / kMbps;
  return {value, slope};
}

inline SubproblemLinearization linearize(const Point& x_t, std::vector<std::vector<double>> l_t,
                                         const power::PowerAllocation& alloc, const Scenario& s, double rho) {
  const auto& c = s.channel;
  SubproblemLinearization lin;
  lin.anchor = x_t;
  lin.l_anchor = std::move(l_t);
  lin.rho = rho;
  const int K = s.num_users();
  lin.a.resize(K);
  lin.b.resize(K);
  lin.zeta.resize(K);
  lin.dist.resize(K);
  for (int k = 0; k < K; ++k) {
    const double d = (x_t - s.ues[k]).norm();
    if (!(d > 0.0)) throw ZeroDistanceError("anchor coincides with a user");
    lin.dist[k] = d;
    lin.zeta[k] = alloc.users[k] * c.los_gain / (c.noise_psd * c.user_bandwidth);
    std::tie(lin.a[k], lin.b[k]) = rate_and_slope(d, lin.zeta[k], c.user_bandwidth, c.los_exponent);
  }
  const double d = (x_t - s.bs).norm();
  if (!(d > 0.0)) throw ZeroDistanceError("anchor coincides with the base station");
  lin.dist_bs = d;
  lin.zeta_bs = alloc.bs * c.los_gain / (c.noise_psd * c.backhaul_bandwidth);
  std::tie(lin.a_bs, lin.b_bs) = rate_and_slope(d, lin.zeta_bs, c.backhaul_bandwidth, c.los_exponent);
  return lin;
}

/// Tangent lower bound of l^2 at l_t, so that l(1 - l) <= l - 2 l_t l + l_t^2.
inline double penalty_bound(double l, double l_t) { return l - 2.0 * l_t * l + l_t * l_t; }

/// A halfspace a.x - b >= eps enforced without a relaxed binary.
struct FixedPlane {
  int region = 0;
  int plane = 0;
};

struct SubproblemOptions {
  double constraint_eps = 0.0;          // margin on the blockage rows
  std::optional<double> fixed_altitude;  // optimise (x, y) only
  /// When set, the relaxed binaries are dropped and only these planes are enforced.
  std::optional<std::vector<FixedPlane>> fixed_planes;
  conic::Settings solver;
};

struct ConvexSolution {
  Point x = Point::Zero();
  std::vector<std::vector<double>> l;
  double rate = 0.0;       // bit/s
  double objective = 0.0;  // R - penalty bound, Mbps
  conic::Status status = conic::Status::MaxIterations;
  int iterations = 0;
};

/// Objective of the subproblem at (R, l) in Mbps.
inline double subproblem_objective(double rate_mbps, const std::vector<std::vector<double>>& l,
                                   const SubproblemLinearization& lin, std::span<const double> lambda) {
  double v = rate_mbps;
  for (size_t i = 0; i < l.size(); ++i)
    for (size_t j = 0; j < l[i].size(); ++j) v -= lambda[i] * penalty_bound(l[i][j], lin.l_anchor[i][j]);
  return v;
}

inline ConvexSolution solve_subproblem(const SubproblemLinearization& lin, std::span<const double> lambda,
                                       const std::vector<geometry::BlockedRegion>& regions, const Scenario& s,
                                       double big_m, const SubproblemOptions& opt = {}) {
  const int K = s.num_users();
  const bool relaxed = !opt.fixed_planes.has_value();
  const int n_regions = relaxed ? static_cast<int>(regions.size()) : 0;
  if (relaxed && (lambda.size() != regions.size() || lin.l_anchor.size() != regions.size()))
    throw ConfigError("multiplier or anchor count does not match the region count");

  ConvexSolution out;
  if (relaxed) out.l = lin.l_anchor;

  // A collapsed trust region leaves only the anchor.
  if (!(lin.rho > 0.0)) {
    double r = lin.a_bs / K;
    for (int k = 0; k < K; ++k) r = std::min(r, lin.a[k]);
    out.x = lin.anchor;
    out.rate = r * kMbps;
    out.objective = relaxed ? subproblem_objective(r, out.l, lin, lambda) : r;
    out.status = conic::Status::Optimal;
    return out;
  }

  const bool flat = opt.fixed_altitude.has_value();
  const int dim = flat ? 2 : 3;
  const int ri = dim;  // index of R
  const double altitude = flat ? *opt.fixed_altitude : 0.0;
  conic::Problem p(dim + 1);
  p.set_cost(ri, -1.0);

  // Cone h - G z = (h0 - g0.z, pos - centre) with pos = (x, y[, z]).
  auto add_ball = [&](double h0, double g_rate, const Point& centre) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, dim + 1);
    Eigen::VectorXd h(4);
    h[0] = h0;
    g(0, ri) = g_rate;
    for (int a = 0; a < 3; ++a) {
      if (a < dim) {
        h[a + 1] = -centre[a];
        g(a + 1, a) = -1.0;
      } else {
        h[a + 1] = altitude - centre[a];
      }
    }
    p.add_soc(std::move(g), std::move(h));
  };
  for (int k = 0; k < K; ++k) add_ball((lin.a[k] + lin.b[k] * lin.dist[k]) / lin.b[k], 1.0 / lin.b[k], s.ues[k]);
  add_ball((lin.a_bs + lin.b_bs * lin.dist_bs) / lin.b_bs, K / lin.b_bs, s.bs);
  {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
    Eigen::VectorXd h(dim + 1);
    h[0] = lin.rho;
    for (int a = 0; a < dim; ++a) {
      h[a + 1] = -lin.anchor[a];
      g(a + 1, a) = -1.0;
    }
    p.add_soc(std::move(g), std::move(h));
  }

  std::vector<double> row(dim + 1, 0.0);
  auto reset = [&] { std::fill(row.begin(), row.end(), 0.0); };
  const Point lo = s.bounds.lower(), hi = s.bounds.upper();
  for (int a = 0; a < dim; ++a) {
    reset();
    row[a] = 1.0;
    p.add_linear(row, -1, {}, hi[a]);
    row[a] = -1.0;
    p.add_linear(row, -1, {}, -lo[a]);
  }

  // a.pos + C l >= b + eps  ->  -a.pos - C l <= -b - eps + (a_z H when flat)
  auto blockage_row = [&](const geometry::Halfspace& hs, int group, int local) {
    reset();
    for (int a = 0; a < dim; ++a) row[a] = -hs.normal[a];
    double rhs = -hs.offset - opt.constraint_eps;
    if (flat) rhs += hs.normal.z() * altitude;
    if (group < 0) {
      p.add_linear(row, -1, {}, rhs);
    } else {
      const std::pair<int, double> coeff{local, -big_m};
      p.add_linear(row, group, {&coeff, 1}, rhs);
    }
  };

  std::vector<int> groups(n_regions);
  for (int i = 0; i < n_regions; ++i) {
    const auto& r = regions[i];
    const int J = r.size();
    groups[i] = p.add_group(J);
    const int off = p.group_offset(groups[i]);
    for (int j = 0; j < J; ++j) {
      p.set_cost(off + j, lambda[i] * (1.0 - 2.0 * lin.l_anchor[i][j]));
      blockage_row(r.halfspaces[j], groups[i], j);
    }
    reset();
    std::vector<std::pair<int, double>> sum;
    for (int j = 0; j < J; ++j) sum.emplace_back(j, 1.0);
    p.add_linear(row, groups[i], sum, J - 1.0);
    for (int j = 0; j < J; ++j) {
      const std::pair<int, double> neg{j, -1.0}, pos{j, 1.0};
      p.add_linear(row, groups[i], {&neg, 1}, 0.0);
      p.add_linear(row, groups[i], {&pos, 1}, 1.0);
    }
  }
  if (!relaxed)
    for (const auto& f : *opt.fixed_planes) blockage_row(regions[f.region].halfspaces[f.plane], -1, 0);

  const auto res = conic::solve(p, opt.solver);
  out.status = res.status;
  out.iterations = res.iterations;
  if (res.status == conic::Status::Infeasible) {
    out.x = lin.anchor;
    return out;
  }
  for (int a = 0; a < 3; ++a) out.x[a] = a < dim ? res.z[a] : altitude;
  for (int i = 0; i < n_regions; ++i) {
    const int off = p.group_offset(groups[i]);
    for (size_t j = 0; j < out.l[i].size(); ++j) out.l[i][j] = res.z[off + j];
  }
  out.rate = res.z[ri] * kMbps;
  out.objective = relaxed ? subproblem_objective(res.z[ri], out.l, lin, lambda) : res.z[ri];
  return out;
}

}  // namespace uavrelay::sca
