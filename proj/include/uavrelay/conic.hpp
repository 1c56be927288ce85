#pragma once

// Primal-dual interior-point solver for small cone programs
//
//     minimize    c'z
//     subject to  G z + s = h,   s in R+^m x Q^{n_1} x ... x Q^{n_p}
//
// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps. The
// variable vector is split into a handful of dense "core" variables followed by
// small independent groups; every linear row touches the core and at most one
// group, and second-order cones touch the core only. The normal equations are
// then reduced onto the core by a Schur complement, so one iteration costs
// O(rows) plus a dense solve of size n_core.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace uavrelay::conic {

enum class Status { Optimal, Infeasible, MaxIterations };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::MaxIterations: return "max-iter";
  }
  return "?";
}

struct Settings {
  int max_iterations = 100;
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  // Accepted when the full tolerances cannot be met before stalling.
  double feastol_reduced = 1e-5;
  double reltol_reduced = 1e-5;
  double step_fraction = 0.99;
};

struct Result {
  Status status = Status::MaxIterations;
  Eigen::VectorXd z, s, y;
  int iterations = 0;
  double primal_objective = 0.0;
  double gap = 0.0;
  double primal_residual = 0.0;  // relative
  double dual_residual = 0.0;    // relative
  bool reduced_accuracy = false;
};

class Problem {
 public:
  explicit Problem(int n_core) : n_core_(n_core) { c_.assign(n_core, 0.0); }

  int num_core() const { return n_core_; }
  int num_variables() const { return static_cast<int>(c_.size()); }
  int num_groups() const { return static_cast<int>(group_offset_.size()); }
  int num_linear() const { return static_cast<int>(lin_h_.size()); }
  int num_socs() const { return static_cast<int>(socs_.size()); }
  int group_offset(int g) const { return group_offset_[g]; }
  int group_size(int g) const { return group_size_[g]; }

  /// Appends a group of `size` variables; returns its index.
  int add_group(int size) {
    group_offset_.push_back(num_variables());
    group_size_.push_back(size);
    c_.resize(c_.size() + size, 0.0);
    return num_groups() - 1;
  }

  void set_cost(int var, double value) { c_[var] = value; }
  const std::vector<double>& cost() const { return c_; }

  /// Adds core_coeffs . z_core + sum(coeff * z_{group offset + local}) <= rhs.
  /// Rows are normalised to unit Euclidean norm.
  void add_linear(std::span<const double> core_coeffs, int group,
                  std::span<const std::pair<int, double>> group_coeffs, double rhs) {
    double norm2 = 0.0;
    for (double v : core_coeffs) norm2 += v * v;
    for (const auto& [i, v] : group_coeffs) norm2 += v * v;
    const double scale = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 1.0;
    for (int i = 0; i < n_core_; ++i) lin_core_.push_back(i < static_cast<int>(core_coeffs.size()) ? core_coeffs[i] * scale : 0.0);
    lin_group_.push_back(group);
    for (const auto& [i, v] : group_coeffs) {
      lin_idx_.push_back(i);
      lin_val_.push_back(v * scale);
    }
    lin_ptr_.push_back(static_cast<int>(lin_idx_.size()));
    lin_h_.push_back(rhs * scale);
  }

  /// Adds h - G z_core in Q^{dim}, i.e. h0 - g0.z >= || h1 - G1 z ||.
  void add_soc(Eigen::MatrixXd g_core, Eigen::VectorXd h) { socs_.push_back({std::move(g_core), std::move(h)}); }

  // Evaluation helpers used by the solver and by callers checking residuals.
  Eigen::VectorXd apply_g(const Eigen::VectorXd& z) const {
    Eigen::VectorXd out(num_rows());
    for (int r = 0; r < num_linear(); ++r) {
      double v = 0.0;
      for (int i = 0; i < n_core_; ++i) v += lin_core_[r * n_core_ + i] * z[i];
      if (lin_group_[r] >= 0) {
        const int off = group_offset_[lin_group_[r]];
        for (int p = lin_ptr_[r]; p < lin_ptr_[r + 1]; ++p) v += lin_val_[p] * z[off + lin_idx_[p]];
      }
      out[r] = v;
    }
    int row = num_linear();
    for (const auto& soc : socs_) {
      out.segment(row, soc.h.size()) = soc.g * z.head(n_core_);
      row += static_cast<int>(soc.h.size());
    }
    return out;
  }

  Eigen::VectorXd apply_gt(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(num_variables());
    for (int r = 0; r < num_linear(); ++r) {
      for (int i = 0; i < n_core_; ++i) out[i] += lin_core_[r * n_core_ + i] * y[r];
      if (lin_group_[r] >= 0) {
        const int off = group_offset_[lin_group_[r]];
        for (int p = lin_ptr_[r]; p < lin_ptr_[r + 1]; ++p) out[off + lin_idx_[p]] += lin_val_[p] * y[r];
      }
    }
    int row = num_linear();
    for (const auto& soc : socs_) {
      out.head(n_core_) += soc.g.transpose() * y.segment(row, soc.h.size());
      row += static_cast<int>(soc.h.size());
    }
    return out;
  }

  Eigen::VectorXd h() const {
    Eigen::VectorXd out(num_rows());
    for (int r = 0; r < num_linear(); ++r) out[r] = lin_h_[r];
    int row = num_linear();
    for (const auto& soc : socs_) {
      out.segment(row, soc.h.size()) = soc.h;
      row += static_cast<int>(soc.h.size());
    }
    return out;
  }

  Eigen::VectorXd c() const { return Eigen::Map<const Eigen::VectorXd>(c_.data(), num_variables()); }

  int num_rows() const {
    int m = num_linear();
    for (const auto& soc : socs_) m += static_cast<int>(soc.h.size());
    return m;
  }

  std::vector<int> soc_dims() const {
    std::vector<int> d;
    for (const auto& soc : socs_) d.push_back(static_cast<int>(soc.h.size()));
    return d;
  }

 private:
  struct Soc {
    Eigen::MatrixXd g;
    Eigen::VectorXd h;
  };

  friend class Solver;

  int n_core_;
  std::vector<double> c_;
  std::vector<int> group_offset_, group_size_;
  std::vector<double> lin_core_;
  std::vector<int> lin_group_;
  std::vector<int> lin_ptr_{0};
  std::vector<int> lin_idx_;
  std::vector<double> lin_val_;
  std::vector<double> lin_h_;
  std::vector<Soc> socs_;
};

namespace detail {

/// Smallest value of x in the cone ordering: s_i for R+, x0 - ||x1|| for Q.
inline double min_eig(const Eigen::VectorXd& x, int m_lin, const std::vector<int>& dims) {
  double v = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m_lin; ++i) v = std::min(v, x[i]);
  int row = m_lin;
  for (int d : dims) {
    v = std::min(v, x[row] - x.segment(row + 1, d - 1).norm());
    row += d;
  }
  return v;
}

inline void add_identity(Eigen::VectorXd& x, double t, int m_lin, const std::vector<int>& dims) {
  for (int i = 0; i < m_lin; ++i) x[i] += t;
  int row = m_lin;
  for (int d : dims) {
    x[row] += t;
    row += d;
  }
}

/// Largest alpha >= 0 (capped at `cap`) with x + alpha d in the cone; x interior.
inline double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& d, int m_lin, const std::vector<int>& dims,
                       double cap) {
  double alpha = cap;
  for (int i = 0; i < m_lin; ++i)
    if (d[i] < 0.0) alpha = std::min(alpha, -x[i] / d[i]);
  int row = m_lin;
  for (int dim : dims) {
    const double x0 = x[row], d0 = d[row];
    const auto x1 = x.segment(row + 1, dim - 1);
    const auto d1 = d.segment(row + 1, dim - 1);
    const double a = d0 * d0 - d1.squaredNorm();
    const double b = x0 * d0 - x1.dot(d1);
    const double c = std::max(x0 * x0 - x1.squaredNorm(), 0.0);
    double root = std::numeric_limits<double>::infinity();
    const double disc = b * b - a * c;
    if (std::abs(a) <= 1e-300) {
      if (b < 0.0) root = -c / (2.0 * b);
    } else if (a < 0.0) {
      root = (b + std::sqrt(std::max(disc, 0.0))) / (-a);
    } else if (b < 0.0 && disc >= 0.0) {
      root = c / (-b + std::sqrt(disc));  // smaller root, cancellation-free form
    }
    // Guard the x0 + alpha d0 >= 0 branch of the cone.
    if (d0 < 0.0) root = std::min(root, -x0 / d0);
    alpha = std::min(alpha, root);
    row += dim;
  }
  return std::max(alpha, 0.0);
}

}  // namespace detail

/// Nesterov-Todd scaling for the whole product cone.
struct Scaling {
  Eigen::VectorXd lin_w;                 // W = diag(lin_w)
  std::vector<Eigen::MatrixXd> soc_w;    // W
  std::vector<Eigen::MatrixXd> soc_winv; // W^{-1}
  Eigen::VectorXd lambda;                // W^{-1} s = W y

  static Scaling compute(const Eigen::VectorXd& s, const Eigen::VectorXd& y, int m_lin, const std::vector<int>& dims) {
    Scaling sc;
    sc.lambda.resize(s.size());
    sc.lin_w.resize(m_lin);
    for (int i = 0; i < m_lin; ++i) {
      sc.lin_w[i] = std::sqrt(s[i] / y[i]);
      sc.lambda[i] = std::sqrt(s[i] * y[i]);
    }
    int row = m_lin;
    for (int d : dims) {
      const Eigen::VectorXd sv = s.segment(row, d), yv = y.segment(row, d);
      const double s_norm = std::sqrt(std::max(sv[0] * sv[0] - sv.tail(d - 1).squaredNorm(), 1e-300));
      const double y_norm = std::sqrt(std::max(yv[0] * yv[0] - yv.tail(d - 1).squaredNorm(), 1e-300));
      const Eigen::VectorXd sb = sv / s_norm, yb = yv / y_norm;
      const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(yb)));
      Eigen::VectorXd w(d);
      w[0] = (sb[0] + yb[0]) / (2.0 * gamma);
      w.tail(d - 1) = (sb.tail(d - 1) - yb.tail(d - 1)) / (2.0 * gamma);
      const double beta = std::sqrt(s_norm / y_norm);
      Eigen::MatrixXd wb(d, d);
      wb(0, 0) = w[0];
      wb.block(0, 1, 1, d - 1) = w.tail(d - 1).transpose();
      wb.block(1, 0, d - 1, 1) = w.tail(d - 1);
      wb.block(1, 1, d - 1, d - 1) =
          Eigen::MatrixXd::Identity(d - 1, d - 1) + w.tail(d - 1) * w.tail(d - 1).transpose() / (1.0 + w[0]);
      // W̄^{-1} = J W̄ J
      Eigen::MatrixXd wbinv = wb;
      wbinv.block(0, 1, 1, d - 1) *= -1.0;
      wbinv.block(1, 0, d - 1, 1) *= -1.0;
      sc.soc_w.push_back(beta * wb);
      sc.soc_winv.push_back(wbinv / beta);
      sc.lambda.segment(row, d) = sc.soc_w.back() * yv;
      row += d;
    }
    return sc;
  }

  Eigen::VectorXd apply_w(const Eigen::VectorXd& u, int m_lin) const {
    Eigen::VectorXd out(u.size());
    out.head(m_lin) = lin_w.cwiseProduct(u.head(m_lin));
    int row = m_lin;
    for (const auto& w : soc_w) {
      out.segment(row, w.rows()) = w * u.segment(row, w.rows());
      row += static_cast<int>(w.rows());
    }
    return out;
  }

  Eigen::VectorXd apply_winv(const Eigen::VectorXd& u, int m_lin) const {
    Eigen::VectorXd out(u.size());
    out.head(m_lin) = u.head(m_lin).cwiseQuotient(lin_w);
    int row = m_lin;
    for (const auto& w : soc_winv) {
      out.segment(row, w.rows()) = w * u.segment(row, w.rows());
      row += static_cast<int>(w.rows());
    }
    return out;
  }
};

/// Jordan product u o v over the product cone.
inline Eigen::VectorXd jordan_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v, int m_lin,
                                      const std::vector<int>& dims) {
  Eigen::VectorXd out(u.size());
  out.head(m_lin) = u.head(m_lin).cwiseProduct(v.head(m_lin));
  int row = m_lin;
  for (int d : dims) {
    const auto us = u.segment(row, d), vs = v.segment(row, d);
    out[row] = us.dot(vs);
    out.segment(row + 1, d - 1) = us[0] * vs.tail(d - 1) + vs[0] * us.tail(d - 1);
    row += d;
  }
  return out;
}

/// Solves lambda o u = r for u.
inline Eigen::VectorXd jordan_divide(const Eigen::VectorXd& lambda, const Eigen::VectorXd& r, int m_lin,
                                     const std::vector<int>& dims) {
  Eigen::VectorXd out(r.size());
  out.head(m_lin) = r.head(m_lin).cwiseQuotient(lambda.head(m_lin));
  int row = m_lin;
  for (int d : dims) {
    const double l0 = lambda[row];
    const auto l1 = lambda.segment(row + 1, d - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double u0 = (l0 * r[row] - l1.dot(r.segment(row + 1, d - 1))) / det;
    out[row] = u0;
    out.segment(row + 1, d - 1) = (r.segment(row + 1, d - 1) - u0 * l1) / l0;
    row += d;
  }
  return out;
}

class Solver {
 public:
  explicit Solver(const Problem& p, Settings settings = {})
      : p_(p), settings_(settings), m_lin_(p.num_linear()), dims_(p.soc_dims()) {}

  Result solve() {
    const int n = p_.num_variables();
    const Eigen::VectorXd c = p_.c();
    const Eigen::VectorXd h = p_.h();
    const double c_scale = std::max(1.0, c.norm());
    const double h_scale = std::max(1.0, h.norm());
    double nu = m_lin_ + static_cast<double>(dims_.size());

    Result res, best;
    double best_merit = std::numeric_limits<double>::infinity();
    // Initial point: least-squares primal, least-norm dual, shifted into the cone.
    identity_weights();
    factor();
    Eigen::VectorXd z = solve_normal(p_.apply_gt(h));
    Eigen::VectorXd s = h - p_.apply_g(z);
    Eigen::VectorXd y = p_.apply_g(solve_normal(-c));
    shift_into_cone(s);
    shift_into_cone(y);

    for (int it = 0; it <= settings_.max_iterations; ++it) {
      const Eigen::VectorXd rp = p_.apply_g(z) + s - h;
      const Eigen::VectorXd gty = p_.apply_gt(y);
      const Eigen::VectorXd rd = gty + c;
      const double gap = s.dot(y);
      const double pcost = c.dot(z);
      const double pres = rp.norm() / h_scale;
      const double dres = rd.norm() / c_scale;
      res.z = z;
      res.s = s;
      res.y = y;
      res.iterations = it;
      res.primal_objective = pcost;
      res.gap = gap;
      res.primal_residual = pres;
      res.dual_residual = dres;
      if (!std::isfinite(gap) || !std::isfinite(pcost) || !std::isfinite(pres) || !std::isfinite(dres)) break;
      const double merit = std::max({pres, dres, gap / std::max(1.0, std::abs(pcost))});
      if (merit < best_merit) {
        best_merit = merit;
        best = res;
      }
      if (pres <= settings_.feastol && dres <= settings_.feastol &&
          (gap <= settings_.abstol || gap <= settings_.reltol * std::max(1.0, std::abs(pcost)))) {
        res.status = Status::Optimal;
        return res;
      }
      const double hty = h.dot(y);
      if (hty < 0.0 && gty.norm() <= settings_.feastol * (-hty)) {
        res.status = Status::Infeasible;
        return res;
      }
      if (it == settings_.max_iterations) break;

      const Scaling sc = Scaling::compute(s, y, m_lin_, dims_);
      scaling_weights(sc);
      factor();

      const double mu = gap / nu;
      // Predictor.
      const Eigen::VectorXd ll = jordan_product(sc.lambda, sc.lambda, m_lin_, dims_);
      Eigen::VectorXd dz, ds, dy;
      newton(sc, rp, rd, -ll, dz, ds, dy);
      const double a_aff = std::min(detail::max_step(s, ds, m_lin_, dims_, 1.0),
                                    detail::max_step(y, dy, m_lin_, dims_, 1.0));
      const double mu_aff = (s + a_aff * ds).dot(y + a_aff * dy) / nu;
      const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

      // Corrector.
      Eigen::VectorXd rc = -ll - jordan_product(sc.apply_winv(ds, m_lin_), sc.apply_w(dy, m_lin_), m_lin_, dims_);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(rc.size());
      detail::add_identity(e, 1.0, m_lin_, dims_);
      rc += sigma * mu * e;
      newton(sc, rp, rd, rc, dz, ds, dy);
      const double a_max = std::min(detail::max_step(s, ds, m_lin_, dims_, 1e30),
                                    detail::max_step(y, dy, m_lin_, dims_, 1e30));
      const double alpha = std::min(1.0, settings_.step_fraction * a_max);
      if (!(alpha > 1e-10)) break;
      z += alpha * dz;
      s += alpha * ds;
      y += alpha * dy;
    }
    (void)n;
    best.status = Status::MaxIterations;
    if (best.primal_residual <= settings_.feastol_reduced && best.dual_residual <= settings_.feastol_reduced &&
        best.gap <= settings_.reltol_reduced * std::max(1.0, std::abs(best.primal_objective))) {
      best.status = Status::Optimal;
      best.reduced_accuracy = true;
    }
    return best;
  }

 private:
  // Diagonal (linear) and dense (SOC) blocks of W^{-2}.
  void identity_weights() {
    lin_d_ = Eigen::VectorXd::Ones(m_lin_);
    soc_d_.clear();
    for (int d : dims_) soc_d_.push_back(Eigen::MatrixXd::Identity(d, d));
  }

  void scaling_weights(const Scaling& sc) {
    lin_d_ = sc.lin_w.cwiseAbs2().cwiseInverse();
    soc_d_.clear();
    for (const auto& wi : sc.soc_winv) soc_d_.push_back(wi * wi);
  }

  Eigen::VectorXd apply_d(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(u.size());
    out.head(m_lin_) = lin_d_.cwiseProduct(u.head(m_lin_));
    int row = m_lin_;
    for (const auto& d : soc_d_) {
      out.segment(row, d.rows()) = d * u.segment(row, d.rows());
      row += static_cast<int>(d.rows());
    }
    return out;
  }

  Eigen::VectorXd apply_h(const Eigen::VectorXd& v) const { return p_.apply_gt(apply_d(p_.apply_g(v))); }

  // Forms H = G' D G blockwise and reduces it onto the core variables.
  void factor() {
    const int nc = p_.n_core_;
    const int ng = p_.num_groups();
    Eigen::MatrixXd hcc = Eigen::MatrixXd::Zero(nc, nc);
    hgg_.assign(ng, Eigen::MatrixXd());
    hcg_.assign(ng, Eigen::MatrixXd());
    for (int g = 0; g < ng; ++g) {
      hgg_[g] = Eigen::MatrixXd::Zero(p_.group_size_[g], p_.group_size_[g]);
      hcg_[g] = Eigen::MatrixXd::Zero(nc, p_.group_size_[g]);
    }
    Eigen::VectorXd gc(nc);
    for (int r = 0; r < m_lin_; ++r) {
      const double d = lin_d_[r];
      for (int i = 0; i < nc; ++i) gc[i] = p_.lin_core_[r * nc + i];
      hcc.noalias() += d * gc * gc.transpose();
      const int g = p_.lin_group_[r];
      if (g < 0) continue;
      for (int a = p_.lin_ptr_[r]; a < p_.lin_ptr_[r + 1]; ++a) {
        const int ia = p_.lin_idx_[a];
        const double va = d * p_.lin_val_[a];
        hcg_[g].col(ia) += va * gc;
        for (int b = p_.lin_ptr_[r]; b < p_.lin_ptr_[r + 1]; ++b) hgg_[g](ia, p_.lin_idx_[b]) += va * p_.lin_val_[b];
      }
    }
    for (std::size_t k = 0; k < p_.socs_.size(); ++k) hcc.noalias() += p_.socs_[k].g.transpose() * soc_d_[k] * p_.socs_[k].g;

    group_llt_.clear();
    group_x_.assign(ng, Eigen::MatrixXd());
    Eigen::MatrixXd schur = hcc;
    for (int g = 0; g < ng; ++g) {
      Eigen::MatrixXd hg = hgg_[g];
      const double reg = 1e-14 * std::max(1.0, hg.diagonal().maxCoeff());
      hg.diagonal().array() += reg;
      group_llt_.emplace_back(hg);
      group_x_[g] = group_llt_.back().solve(hcg_[g].transpose());
      schur.noalias() -= hcg_[g] * group_x_[g];
    }
    const double reg = 1e-14 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
    schur.diagonal().array() += reg;
    schur_ldlt_.compute(schur);
  }

  Eigen::VectorXd solve_reduced(const Eigen::VectorXd& r) const {
    const int nc = p_.n_core_;
    Eigen::VectorXd rc = r.head(nc);
    std::vector<Eigen::VectorXd> tg(p_.num_groups());
    for (int g = 0; g < p_.num_groups(); ++g) {
      tg[g] = group_llt_[g].solve(r.segment(p_.group_offset_[g], p_.group_size_[g]));
      rc.noalias() -= hcg_[g] * tg[g];
    }
    Eigen::VectorXd out(r.size());
    out.head(nc) = schur_ldlt_.solve(rc);
    for (int g = 0; g < p_.num_groups(); ++g)
      out.segment(p_.group_offset_[g], p_.group_size_[g]) = tg[g] - group_x_[g] * out.head(nc);
    return out;
  }

  Eigen::VectorXd solve_normal(const Eigen::VectorXd& r) const {
    Eigen::VectorXd x = solve_reduced(r);
    for (int k = 0; k < 2; ++k) x += solve_reduced(r - apply_h(x));
    return x;
  }

  void newton(const Scaling& sc, const Eigen::VectorXd& rp, const Eigen::VectorXd& rd, const Eigen::VectorXd& rc,
              Eigen::VectorXd& dz, Eigen::VectorXd& ds, Eigen::VectorXd& dy) const {
    const Eigen::VectorXd wu = sc.apply_w(jordan_divide(sc.lambda, rc, m_lin_, dims_), m_lin_);
    const Eigen::VectorXd t = rp + wu;
    dz = solve_normal(-rd - p_.apply_gt(apply_d(t)));
    const Eigen::VectorXd gdz = p_.apply_g(dz);
    dy = apply_d(gdz + t);
    ds = -rp - gdz;
  }

  void shift_into_cone(Eigen::VectorXd& x) const {
    const double t = -detail::min_eig(x, m_lin_, dims_);
    if (t >= -1e-8 * std::max(1.0, x.norm())) detail::add_identity(x, 1.0 + std::max(t, 0.0), m_lin_, dims_);
  }

  const Problem& p_;
  Settings settings_;
  int m_lin_;
  std::vector<int> dims_;
  Eigen::VectorXd lin_d_;
  std::vector<Eigen::MatrixXd> soc_d_;
  std::vector<Eigen::MatrixXd> hgg_, hcg_, group_x_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> group_llt_;
  Eigen::LDLT<Eigen::MatrixXd> schur_ldlt_;
};

inline Result solve(const Problem& p, Settings settings = {}) { return Solver(p, settings).solve(); }

}  // namespace uavrelay::conic
