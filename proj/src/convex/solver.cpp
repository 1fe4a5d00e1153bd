// SPDX-License-Identifier: Apache-2.0
// Copyright (c) cfnoma contributors
//
// Dense primal-dual interior-point method with Mehrotra-style
// predictor-corrector steps for the smooth convex programs produced by the
// subproblem builders: affine rows, squared-norm rows and log-epigraph
// rows, plus box bounds folded into affine rows.  The reduced KKT system
// is solved by a Cholesky factorization of
//   M = sum_j z_j Hess_j + sum_j (z_j/s_j) grad_j grad_j^T + delta*I,
// with equality constraints (rare here) appended as a saddle block.

#include "convex/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

namespace cfnoma::convex {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

namespace {

struct Triplet {
  int r, c;
  double v;
};

// One inequality row g(x) <= 0 in a uniform evaluated form.
struct Row {
  enum Kind { kAffine, kQuad, kLog } kind = kAffine;
  AffineExpr a;                  // affine expr, or log lhs
  double scale = 0.0;            // log only
  AffineExpr arg;                // log only
  std::vector<AffineExpr> vec;   // quad only
  AffineExpr bound;              // quad only

  std::vector<int> support;      // sorted unique variable indices
  std::vector<Triplet> hess2;    // quad only: 2 * sum_r coef coef^T, lower triangle

  // per-iteration scratch
  double g = 0.0;                // constraint value
  std::vector<double> grad;      // gradient on support
  double argval = 0.0;           // log only
};

void add_support(std::vector<int>& sup, const AffineExpr& e) {
  sup.insert(sup.end(), e.vars().begin(), e.vars().end());
}

void finish_support(std::vector<int>& sup) {
  std::sort(sup.begin(), sup.end());
  sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
}

int pos_in(const std::vector<int>& sup, int var) {
  return static_cast<int>(std::lower_bound(sup.begin(), sup.end(), var) - sup.begin());
}

class Ipm {
 public:
  Ipm(const ConvexProgram& p, const SolverOptions& opts) : p_(p), opts_(opts) { build(); }

  SolverResult run();

 private:
  void build();
  bool repair_domain(Eigen::VectorXd& x) const;
  void eval_rows(const Eigen::VectorXd& x);
  bool domain_ok(const Eigen::VectorXd& x) const;
  double residual_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& s,
                       const Eigen::VectorXd& z, const Eigen::VectorXd& y, double mu);
  SolverResult run_phase1();

  const ConvexProgram& p_;
  SolverOptions opts_;
  int n_ = 0;                 // variables
  int m_ = 0;                 // inequality rows
  int neq_ = 0;               // equality rows
  Eigen::VectorXd c_;         // minimize-sense objective
  std::vector<Row> rows_;
  Eigen::MatrixXd aeq_;
  Eigen::VectorXd beq_;
};

void Ipm::build() {
  n_ = p_.num_variables();
  c_ = -p_.objective();

  for (const auto& con : p_.affine_cons()) {
    Row r;
    r.kind = Row::kAffine;
    r.a = con.expr;
    add_support(r.support, r.a);
    finish_support(r.support);
    rows_.push_back(std::move(r));
  }
  // Finite box bounds as affine rows.
  for (int v = 0; v < n_; ++v) {
    if (std::isfinite(p_.lower_bound(v))) {
      Row r;
      r.kind = Row::kAffine;
      r.a = AffineExpr::term(v, -1.0).add_constant(p_.lower_bound(v));
      r.support = {v};
      rows_.push_back(std::move(r));
    }
    if (std::isfinite(p_.upper_bound(v))) {
      Row r;
      r.kind = Row::kAffine;
      r.a = AffineExpr::term(v, 1.0).add_constant(-p_.upper_bound(v));
      r.support = {v};
      rows_.push_back(std::move(r));
    }
  }
  for (const auto& con : p_.quad_cons()) {
    Row r;
    r.kind = Row::kQuad;
    r.vec = con.vec;
    r.bound = con.bound;
    for (const auto& row : r.vec) add_support(r.support, row);
    add_support(r.support, r.bound);
    finish_support(r.support);
    // Constant Hessian 2 * sum_r coef coef^T on the support (lower triangle).
    const int ns = static_cast<int>(r.support.size());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(ns, ns);
    for (const auto& row : r.vec) {
      for (std::size_t i = 0; i < row.vars().size(); ++i)
        for (std::size_t j = 0; j < row.vars().size(); ++j) {
          const int pi = pos_in(r.support, row.vars()[i]);
          const int pj = pos_in(r.support, row.vars()[j]);
          if (pi >= pj) acc(pi, pj) += 2.0 * row.coefs()[i] * row.coefs()[j];
        }
    }
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j <= i; ++j)
        if (acc(i, j) != 0.0) r.hess2.push_back({i, j, acc(i, j)});
    rows_.push_back(std::move(r));
  }
  for (const auto& con : p_.log_cons()) {
    Row r;
    r.kind = Row::kLog;
    r.a = con.lhs;
    r.scale = con.scale;
    r.arg = con.arg;
    add_support(r.support, r.a);
    add_support(r.support, r.arg);
    finish_support(r.support);
    rows_.push_back(std::move(r));
  }
  m_ = static_cast<int>(rows_.size());
  for (auto& r : rows_) r.grad.assign(r.support.size(), 0.0);

  neq_ = static_cast<int>(p_.equality_cons().size());
  aeq_.setZero(neq_, n_);
  beq_.setZero(neq_);
  for (int e = 0; e < neq_; ++e) {
    const auto& ex = p_.equality_cons()[static_cast<std::size_t>(e)].expr;
    for (std::size_t i = 0; i < ex.vars().size(); ++i) aeq_(e, ex.vars()[i]) = ex.coefs()[i];
    beq_(e) = -ex.constant();
  }
}

bool Ipm::domain_ok(const Eigen::VectorXd& x) const {
  for (const auto& r : rows_)
    if (r.kind == Row::kLog && r.arg.eval(x) <= 0.0) return false;
  return true;
}

// Nudges x (minimum-norm along each arg gradient) until all log arguments
// are strictly positive; returns false if that fails.
bool Ipm::repair_domain(Eigen::VectorXd& x) const {
  for (int pass = 0; pass < 12; ++pass) {
    bool bad = false;
    for (const auto& r : rows_) {
      if (r.kind != Row::kLog) continue;
      const double val = r.arg.eval(x);
      const double target = 1e-3 * (1.0 + std::abs(r.arg.constant()));
      if (val >= target) continue;
      bad = true;
      double nrm2 = 0.0;
      for (double cf : r.arg.coefs()) nrm2 += cf * cf;
      if (nrm2 == 0.0) return false;  // constant non-positive argument
      const double step = (target - val) / nrm2;
      for (std::size_t i = 0; i < r.arg.vars().size(); ++i)
        x(r.arg.vars()[i]) += step * r.arg.coefs()[i];
    }
    if (!bad) return true;
    // Keep the repaired point inside its box.
    for (int v = 0; v < n_; ++v)
      x(v) = std::clamp(x(v), p_.lower_bound(v), p_.upper_bound(v));
  }
  return domain_ok(x);
}

void Ipm::eval_rows(const Eigen::VectorXd& x) {
  for (auto& r : rows_) {
    std::fill(r.grad.begin(), r.grad.end(), 0.0);
    switch (r.kind) {
      case Row::kAffine: {
        r.g = r.a.eval(x);
        for (std::size_t i = 0; i < r.a.vars().size(); ++i)
          r.grad[static_cast<std::size_t>(pos_in(r.support, r.a.vars()[i]))] += r.a.coefs()[i];
        break;
      }
      case Row::kQuad: {
        double acc = -r.bound.eval(x);
        for (std::size_t i = 0; i < r.bound.vars().size(); ++i)
          r.grad[static_cast<std::size_t>(pos_in(r.support, r.bound.vars()[i]))] -=
              r.bound.coefs()[i];
        for (const auto& row : r.vec) {
          const double v = row.eval(x);
          acc += v * v;
          for (std::size_t i = 0; i < row.vars().size(); ++i)
            r.grad[static_cast<std::size_t>(pos_in(r.support, row.vars()[i]))] +=
                2.0 * v * row.coefs()[i];
        }
        r.g = acc;
        break;
      }
      case Row::kLog: {
        r.argval = r.arg.eval(x);
        r.g = r.a.eval(x) - r.scale * std::log(r.argval);
        for (std::size_t i = 0; i < r.a.vars().size(); ++i)
          r.grad[static_cast<std::size_t>(pos_in(r.support, r.a.vars()[i]))] += r.a.coefs()[i];
        const double w = r.scale / r.argval;
        for (std::size_t i = 0; i < r.arg.vars().size(); ++i)
          r.grad[static_cast<std::size_t>(pos_in(r.support, r.arg.vars()[i]))] -=
              w * r.arg.coefs()[i];
        break;
      }
    }
  }
}

double Ipm::residual_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& s,
                          const Eigen::VectorXd& z, const Eigen::VectorXd& y, double mu) {
  eval_rows(x);
  Eigen::VectorXd rd = c_;
  for (int j = 0; j < m_; ++j) {
    const Row& r = rows_[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < r.support.size(); ++i) rd(r.support[i]) += z(j) * r.grad[i];
  }
  if (neq_ > 0) rd += aeq_.transpose() * y;
  double acc = rd.squaredNorm();
  for (int j = 0; j < m_; ++j) {
    const double rp = rows_[static_cast<std::size_t>(j)].g + s(j);
    const double rc = s(j) * z(j) - mu;
    acc += rp * rp + rc * rc;
  }
  if (neq_ > 0) acc += (aeq_ * x - beq_).squaredNorm();
  return std::sqrt(acc);
}

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, double tau) {
  double a = 1.0;
  for (int i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -tau * v(i) / dv(i));
  return a;
}

SolverResult Ipm::run() {
  const auto t0 = std::chrono::steady_clock::now();
  SolverResult res;
  auto finish = [&](SolveStatus st, const Eigen::VectorXd* x, int iters, double kkt) {
    res.status = st;
    res.iterations = iters;
    res.kkt_residual = kkt;
    if (st == SolveStatus::Optimal && x != nullptr) {
      res.x = *x;
      res.objective = p_.eval_objective(*x);
    }
    res.solve_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
  };

  Eigen::VectorXd x = p_.initial_point();
  for (int v = 0; v < n_; ++v) x(v) = std::clamp(x(v), p_.lower_bound(v), p_.upper_bound(v));
  if (!repair_domain(x)) return finish(SolveStatus::NumericalFailure, nullptr, 0, kInf);

  if (m_ == 0) {
    // No inequalities: nothing in this codebase builds such programs.
    return finish(SolveStatus::NumericalFailure, nullptr, 0, kInf);
  }

  eval_rows(x);
  Eigen::VectorXd s(m_), z(m_);
  for (int j = 0; j < m_; ++j) {
    s(j) = std::max(-rows_[static_cast<std::size_t>(j)].g, 1e-2);
    z(j) = 1.0;
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(neq_);

  const double obj_scale = 1.0 + c_.cwiseAbs().maxCoeff();
  Eigen::VectorXd dx(n_), ds(m_), dz(m_), dy(neq_);
  Eigen::VectorXd dx_aff(n_), ds_aff(m_), dz_aff(m_);
  double delta = 0.0;
  int stalls = 0;
  double kkt_best = kInf;
  Eigen::VectorXd x_best = x, s_best = s, z_best = z, y_best = y;

  // A wedged slack/dual pair from a degenerate active set can cap every
  // step at the boundary while the iterate is already excellent.
  // Re-centering from the best point seen - fresh slacks and cold duals -
  // reliably un-wedges it, so a stalled or diverging iteration earns a
  // restart as long as the previous stretch at least halved the residual.
  int restarts_left = 3;
  double round_entry = kInf;
  double round_best = kInf;  // progress of the current stretch, for the brake
  auto try_restart = [&]() {
    if (restarts_left == 0 || kkt_best > 0.5 * round_entry) return false;
    --restarts_left;
    round_entry = kkt_best;
    round_best = kInf;
    x = x_best;
    eval_rows(x);
    for (int j = 0; j < m_; ++j) {
      s(j) = std::max(-rows_[static_cast<std::size_t>(j)].g, 1e-2);
      z(j) = 1.0;
    }
    y.setZero();
    delta = 0.0;
    stalls = 0;
    return true;
  };

  // With a degenerate active set the multipliers are not unique, and the
  // combined Newton step can wedge against the boundary: x, the slacks and
  // the gap sit at tolerance while the stationarity residual is pinned.
  // The multipliers can then be recovered directly by a nonnegative
  // least-squares fit of the stationarity condition over the near-active
  // rows (equality multipliers stay free), leaving x untouched.  The
  // candidate is kept separate so a failed attempt cannot poison the
  // strictly positive interior duals.
  Eigen::VectorXd z_pol, y_pol, x_pol;
  auto rd_inf_of = [&](const Eigen::VectorXd& zz, const Eigen::VectorXd& yy) {
    Eigen::VectorXd rd = c_;
    for (int j = 0; j < m_; ++j) {
      const Row& r = rows_[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < r.support.size(); ++i) rd(r.support[i]) += zz(j) * r.grad[i];
    }
    if (neq_ > 0) rd += aeq_.transpose() * yy;
    return rd.cwiseAbs().maxCoeff();
  };
  // Assumes rows_ has been evaluated at the current x.  Crossover style:
  // every dual outside the candidate active set is dropped to zero, so the
  // fit must reproduce the objective gradient from the near-active rows
  // alone and the complementarity gap collapses along with it.
  auto dual_polish = [&]() {
    x_pol = x;
    std::vector<int> act;
    for (int j = 0; j < m_; ++j)
      if (s(j) < 1e-3) act.push_back(j);
    const int na = static_cast<int>(act.size());
    if (na + neq_ == 0) return false;
    const Eigen::VectorXd t = -c_;
    // Lawson-Hanson style outer loop: solve the unconstrained least-squares
    // problem on the kept columns, drop the most negative multiplier, repeat.
    std::vector<char> keep(static_cast<std::size_t>(na), 1);
    std::vector<int> cols;
    Eigen::VectorXd u;
    for (int pass = 0; pass <= na; ++pass) {
      cols.clear();
      for (int a = 0; a < na; ++a)
        if (keep[static_cast<std::size_t>(a)]) cols.push_back(a);
      if (cols.empty() && neq_ == 0) return false;  // every candidate dropped
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n_, static_cast<int>(cols.size()) + neq_);
      for (std::size_t ci = 0; ci < cols.size(); ++ci) {
        const Row& r = rows_[static_cast<std::size_t>(act[static_cast<std::size_t>(cols[ci])])];
        for (std::size_t i = 0; i < r.support.size(); ++i)
          B(r.support[i], static_cast<int>(ci)) = r.grad[i];
      }
      if (neq_ > 0) B.rightCols(neq_) = aeq_.transpose();
      u = B.colPivHouseholderQr().solve(t);
      int worst = -1;
      double wv = -1e-10;
      for (std::size_t ci = 0; ci < cols.size(); ++ci)
        if (u(static_cast<int>(ci)) < wv) {
          wv = u(static_cast<int>(ci));
          worst = cols[static_cast<std::size_t>(ci)];
        }
      if (worst < 0) break;
      keep[static_cast<std::size_t>(worst)] = 0;
    }
    if (!u.allFinite()) return false;
    z_pol = Eigen::VectorXd::Zero(m_);
    for (std::size_t ci = 0; ci < cols.size(); ++ci)
      z_pol(act[static_cast<std::size_t>(cols[ci])]) = std::max(u(static_cast<int>(ci)), 0.0);
    y_pol = neq_ > 0 ? Eigen::VectorXd(u.tail(neq_)) : Eigen::VectorXd();
    // Even a rough fit is a usable starting guess: the refinement below can
    // still converge from it, and the full test at the end is what decides
    // adoption, so nothing is lost by trying.
    return true;
  };
  // Full optimality measure at the candidate (x_pol, z_pol, y_pol) with the
  // slacks implied by the constraint values themselves, so a point moved by
  // the refinement below is judged on its own feasibility.  Leaves rows_
  // evaluated at x_pol.
  auto polished_kkt = [&]() {
    eval_rows(x_pol);
    double viol = 0.0;
    double gap = 0.0;
    for (int j = 0; j < m_; ++j) {
      const double g = rows_[static_cast<std::size_t>(j)].g;
      viol = std::max(viol, g);
      gap += std::max(-g, 0.0) * z_pol(j);
    }
    return std::max({rd_inf_of(z_pol, y_pol) / obj_scale, viol,
                     neq_ > 0 ? (aeq_ * x_pol - beq_).cwiseAbs().maxCoeff() : 0.0,
                     gap / m_ / (1.0 + std::abs(c_.dot(x_pol)))});
  };
  // Newton steps on the system "stationarity + active rows tight + equalities"
  // for the active set identified by the least-squares fit.  Near a corner
  // where several curved constraints meet at a sharp angle the interior
  // iteration stalls a small distance away; this closes that distance
  // quadratically.  Operates purely on the candidate copies.
  auto active_newton = [&]() {
    for (int pass = 0; pass < 3; ++pass) {
      eval_rows(x_pol);
      std::vector<int> act;
      for (int j = 0; j < m_; ++j)
        if (z_pol(j) > 1e-10) act.push_back(j);
      const int na = static_cast<int>(act.size());
      const int dim = n_ + na + neq_;
      Eigen::MatrixXd kk = Eigen::MatrixXd::Zero(dim, dim);
      Eigen::VectorXd rhs(dim);
      Eigen::VectorXd rtop = -c_;
      for (int a = 0; a < na; ++a) {
        const Row& r = rows_[static_cast<std::size_t>(act[static_cast<std::size_t>(a)])];
        const double zj = z_pol(act[static_cast<std::size_t>(a)]);
        if (r.kind == Row::kQuad) {
          for (const auto& t : r.hess2) {
            kk(r.support[static_cast<std::size_t>(t.r)], r.support[static_cast<std::size_t>(t.c)]) +=
                zj * t.v;
            if (t.r != t.c)
              kk(r.support[static_cast<std::size_t>(t.c)],
                 r.support[static_cast<std::size_t>(t.r)]) += zj * t.v;
          }
        } else if (r.kind == Row::kLog) {
          const double w2 = zj * r.scale / (r.argval * r.argval);
          const auto& vars = r.arg.vars();
          const auto& coefs = r.arg.coefs();
          for (std::size_t a1 = 0; a1 < vars.size(); ++a1)
            for (std::size_t b1 = 0; b1 < vars.size(); ++b1)
              kk(vars[a1], vars[b1]) += w2 * coefs[a1] * coefs[b1];
        }
        for (std::size_t i = 0; i < r.support.size(); ++i) {
          kk(n_ + a, r.support[i]) = r.grad[i];
          kk(r.support[i], n_ + a) = r.grad[i];
          rtop(r.support[i]) -= zj * r.grad[i];
        }
        rhs(n_ + a) = -r.g;
      }
      for (int v = 0; v < n_; ++v) kk(v, v) += 1e-11;
      if (neq_ > 0) {
        kk.block(n_ + na, 0, neq_, n_) = aeq_;
        kk.block(0, n_ + na, n_, neq_) = aeq_.transpose();
        rtop -= aeq_.transpose() * y_pol;
        rhs.tail(neq_) = -(aeq_ * x_pol - beq_);
      }
      rhs.head(n_) = rtop;
      const Eigen::VectorXd d = kk.fullPivLu().solve(rhs);
      // A large step means the active-set guess is wrong; bail out rather
      // than leave the trust region of the fit.
      if (!d.allFinite() || d.head(n_).cwiseAbs().maxCoeff() > 0.1) return;
      const Eigen::VectorXd xn = x_pol + d.head(n_);
      for (const auto& lc : p_.log_cons())
        if (lc.arg.eval(xn) <= 0.0) return;
      x_pol = xn;
      for (int a = 0; a < na; ++a) {
        const int j = act[static_cast<std::size_t>(a)];
        z_pol(j) = std::max(z_pol(j) + d(n_ + a), 0.0);
      }
      if (neq_ > 0) y_pol += d.tail(neq_);
    }
  };
  // Shared exit path: least-squares multipliers, then if that alone is not
  // enough, the active-set refinement.  Returns true (with *out filled) when
  // the candidate passes the full test.
  auto try_polish_finish = [&](int iters_done, SolverResult* out) {
    if (!dual_polish()) return false;
    double k2 = polished_kkt();
    if (k2 > opts_.tol_accept) {
      active_newton();
      k2 = polished_kkt();
    }
    if (k2 <= opts_.tol_accept) {
      *out = finish(SolveStatus::Optimal, &x_pol, iters_done, k2);
      return true;
    }
    return false;
  };

  for (int it = 0; it < opts_.max_iters; ++it) {
    eval_rows(x);

    Eigen::VectorXd rd = c_;
    for (int j = 0; j < m_; ++j) {
      const Row& r = rows_[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < r.support.size(); ++i) rd(r.support[i]) += z(j) * r.grad[i];
    }
    if (neq_ > 0) rd += aeq_.transpose() * y;
    Eigen::VectorXd re = neq_ > 0 ? Eigen::VectorXd(aeq_ * x - beq_) : Eigen::VectorXd();

    double rp_inf = 0.0, s_inf = 0.0;
    for (int j = 0; j < m_; ++j) {
      rp_inf = std::max(rp_inf, std::abs(rows_[static_cast<std::size_t>(j)].g + s(j)));
      s_inf = std::max(s_inf, s(j));
    }
    const double gap = s.dot(z) / m_;
    const double rd_n = rd.cwiseAbs().maxCoeff() / obj_scale;
    const double rp_n = rp_inf / (1.0 + s_inf);
    const double re_n = neq_ > 0 ? re.cwiseAbs().maxCoeff() : 0.0;
    const double gap_n = gap / (1.0 + std::abs(c_.dot(x)));
    const double kkt_now = std::max({rd_n, rp_n, re_n, gap_n});
    // Primal side already at tolerance but optimality is not: try to close
    // the remaining error outright instead of grinding more interior steps.
    if (std::max(rp_n, re_n) <= opts_.tol_accept && kkt_now > opts_.tol_accept &&
        kkt_now < 1e-2) {
      SolverResult out;
      if (try_polish_finish(it, &out)) return out;
      eval_rows(x);
    }
    if (kkt_now < kkt_best) {
      kkt_best = kkt_now;
      x_best = x;
      s_best = s;
      z_best = z;
      y_best = y;
    }
    round_best = std::min(round_best, kkt_now);
    if (kkt_now <= std::max(opts_.tol_feas, opts_.tol_gap))
      return finish(SolveStatus::Optimal, &x, it, kkt_now);
    // A blow-up long after near-convergence means the iteration escaped a
    // degenerate neighborhood; rewinding to the best iterate is all the
    // remaining budget could recover anyway.
    if (kkt_now > round_best * 1e2 && round_best < 1e-2) {
      if (try_restart()) continue;
      break;
    }

    // Rows whose dual-to-slack ratio has grown extreme stay out of the
    // condensed block: folding w_j*grad*grad^T with w_j >> 1 into it
    // swamps the curvature terms, and dividing by the near-zero slack in
    // the back-substitution amplifies rounding until the direction no
    // longer satisfies the linearized dual equation.  Such rows are kept
    // as explicit unknowns and eliminated through a small Schur
    // complement, alongside the equality multipliers.  Early iterations
    // have no such rows and reduce to the plain condensed system.
    std::vector<int> slot(static_cast<std::size_t>(m_), -1);
    int p = 0;
    for (int j = 0; j < m_; ++j)
      if (z(j) > 1e6 * s(j)) slot[static_cast<std::size_t>(j)] = p++;
    const int q = p + neq_;

    // Condensed block (lower triangle) and the bordering columns.
    Eigen::MatrixXd cm = Eigen::MatrixXd::Zero(n_, n_);
    Eigen::MatrixXd bc = Eigen::MatrixXd::Zero(n_, q);
    Eigen::VectorXd bd = Eigen::VectorXd::Zero(q);
    for (int j = 0; j < m_; ++j) {
      const Row& r = rows_[static_cast<std::size_t>(j)];
      const auto& sup = r.support;
      const int bj = slot[static_cast<std::size_t>(j)];
      if (bj < 0) {
        const double w = z(j) / s(j);
        for (std::size_t a = 0; a < sup.size(); ++a) {
          const double ga = r.grad[a];
          if (ga == 0.0) continue;
          for (std::size_t b = 0; b <= a; ++b)
            cm(sup[a], sup[b]) += w * ga * r.grad[b];
        }
      } else {
        for (std::size_t a = 0; a < sup.size(); ++a) bc(sup[a], bj) = r.grad[a];
        bd(bj) = -s(j) / z(j);
      }
      if (r.kind == Row::kQuad) {
        for (const auto& t : r.hess2) cm(sup[static_cast<std::size_t>(t.r)],
                                         sup[static_cast<std::size_t>(t.c)]) += z(j) * t.v;
      } else if (r.kind == Row::kLog) {
        const double w2 = z(j) * r.scale / (r.argval * r.argval);
        for (std::size_t a = 0; a < r.arg.vars().size(); ++a)
          for (std::size_t b = 0; b < r.arg.vars().size(); ++b) {
            const int va = r.arg.vars()[a], vb = r.arg.vars()[b];
            if (va >= vb) cm(va, vb) += w2 * r.arg.coefs()[a] * r.arg.coefs()[b];
          }
      }
    }
    if (neq_ > 0) {
      bc.rightCols(neq_) = aeq_.transpose();
      bd.tail(neq_).setConstant(-1e-10);
    }

    // Factor with escalating regularization: the condensed block may lose
    // rank when a variable is touched only by bordered rows, and the
    // border Schur complement (negated, so positive definite) may be
    // degenerate; both show up as bad pivots and bump the same knob.
    Eigen::LDLT<Eigen::MatrixXd> fact;
    Eigen::LDLT<Eigen::MatrixXd> sfact;
    Eigen::MatrixXd cmreg;
    Eigen::VectorXd bdreg;
    Eigen::MatrixXd schur_cols;  // cm^{-1} * bc
    bool factored = false;
    double reg = delta;
    auto pivots_ok = [](const Eigen::LDLT<Eigen::MatrixXd>& f, int dim) {
      if (f.info() != Eigen::Success) return false;
      const auto& d = f.vectorD();
      for (int v = 0; v < dim; ++v)
        if (!std::isfinite(d(v)) || d(v) < 1e-300) return false;
      return true;
    };
    for (int attempt = 0; attempt < 12 && !factored; ++attempt) {
      cmreg = cm;
      if (reg > 0.0)
        for (int v = 0; v < n_; ++v) cmreg(v, v) += reg;
      fact.compute(cmreg.selfadjointView<Eigen::Lower>());
      factored = pivots_ok(fact, n_);
      if (factored && q > 0) {
        bdreg = bd.array() - reg;
        schur_cols = fact.solve(bc);
        Eigen::MatrixXd neg_schur = bc.transpose() * schur_cols;
        neg_schur.diagonal() -= bdreg;
        sfact.compute(neg_schur);
        factored = pivots_ok(sfact, q) && schur_cols.allFinite();
      }
      if (!factored) reg = std::max(1e-11, reg * 100.0);
    }
    if (!factored) return finish(SolveStatus::NumericalFailure, nullptr, it, kkt_now);
    delta = reg * 0.01;  // decay the carried regularization

    // Bordered solve via the Schur complement, with two rounds of
    // iterative refinement against the regularized blocks to recover the
    // digits the wide dynamic range of the condensed coefficients costs.
    auto solve_once = [&](const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                          Eigen::VectorXd& ox, Eigen::VectorXd& ov) {
      const Eigen::VectorXd u = fact.solve(f);
      if (q > 0) {
        ov = sfact.solve(bc.transpose() * u - g);
        ox = u - schur_cols * ov;
      } else {
        ov.resize(0);
        ox = u;
      }
    };
    auto solve_block = [&](const Eigen::VectorXd& fx, const Eigen::VectorXd& gq,
                           Eigen::VectorXd& odx, Eigen::VectorXd& odv) {
      solve_once(fx, gq, odx, odv);
      for (int ref = 0; ref < 2; ++ref) {
        Eigen::VectorXd rx = fx - cmreg.selfadjointView<Eigen::Lower>() * odx;
        Eigen::VectorXd rq;
        if (q > 0) {
          rx -= bc * odv;
          rq = gq - bc.transpose() * odx - bdreg.cwiseProduct(odv);
        }
        Eigen::VectorXd cx, cv;
        solve_once(rx, rq, cx, cv);
        odx += cx;
        if (q > 0) odv += cv;
      }
    };

    auto solve_dir = [&](const Eigen::VectorXd& rc_vec, Eigen::VectorXd& outdx,
                         Eigen::VectorXd& outds, Eigen::VectorXd& outdz,
                         Eigen::VectorXd& outdy) {
      Eigen::VectorXd fx = -rd;
      Eigen::VectorXd gq = Eigen::VectorXd::Zero(q);
      for (int j = 0; j < m_; ++j) {
        const Row& r = rows_[static_cast<std::size_t>(j)];
        const int bj = slot[static_cast<std::size_t>(j)];
        const double rp = r.g + s(j);
        if (bj < 0) {
          const double coef = (rc_vec(j) + z(j) * rp) / s(j);
          for (std::size_t i = 0; i < r.support.size(); ++i)
            fx(r.support[i]) -= coef * r.grad[i];
        } else {
          gq(bj) = -rp - rc_vec(j) / z(j);
        }
      }
      if (neq_ > 0) gq.tail(neq_) = -re;
      Eigen::VectorXd dv;
      solve_block(fx, gq, outdx, dv);
      if (neq_ > 0) outdy = dv.tail(neq_);
      for (int j = 0; j < m_; ++j) {
        const Row& r = rows_[static_cast<std::size_t>(j)];
        double gdx = 0.0;
        for (std::size_t i = 0; i < r.support.size(); ++i) gdx += r.grad[i] * outdx(r.support[i]);
        outds(j) = -(r.g + s(j)) - gdx;
        const int bj = slot[static_cast<std::size_t>(j)];
        outdz(j) = bj >= 0 ? dv(bj) : (rc_vec(j) - z(j) * outds(j)) / s(j);
      }
    };

    // Predictor (affine scaling, mu = 0).
    Eigen::VectorXd rc(m_);
    for (int j = 0; j < m_; ++j) rc(j) = -s(j) * z(j);
    solve_dir(rc, dx_aff, ds_aff, dz_aff, dy);
    const double a_aff =
        std::min(max_step(s, ds_aff, 1.0), max_step(z, dz_aff, 1.0));
    double gap_aff = 0.0;
    for (int j = 0; j < m_; ++j)
      gap_aff += (s(j) + a_aff * ds_aff(j)) * (z(j) + a_aff * dz_aff(j));
    gap_aff /= m_;
    const double sigma = std::clamp(std::pow(gap_aff / gap, 3.0), 1e-4, 0.9);
    const double mu = sigma * gap;

    // Corrector with second-order complementarity term.
    for (int j = 0; j < m_; ++j) rc(j) = mu - s(j) * z(j) - ds_aff(j) * dz_aff(j);
    solve_dir(rc, dx, ds, dz, dy);

    const double tau = 0.995;
    double ap = std::min(1.0, max_step(s, ds, tau));
    double ad = std::min(1.0, max_step(z, dz, tau));
    // Keep log arguments strictly positive along the primal step.
    for (const auto& r : rows_) {
      if (r.kind != Row::kLog) continue;
      double dir = 0.0;
      for (std::size_t i = 0; i < r.arg.vars().size(); ++i)
        dir += r.arg.coefs()[i] * dx(r.arg.vars()[i]);
      if (dir < 0.0) ap = std::min(ap, -tau * r.argval / dir);
    }
    // Lenient safeguard: shrink on divergence of the overall residual.
    const double phi0 = residual_norm(x, s, z, y, mu);
    bool stepped = false;
    for (int half = 0; half < 25; ++half) {
      Eigen::VectorXd xn = x + ap * dx;
      Eigen::VectorXd sn = s + ap * ds;
      Eigen::VectorXd zn = z + ad * dz;
      Eigen::VectorXd yn = neq_ > 0 ? Eigen::VectorXd(y + ad * dy) : y;
      if (domain_ok(xn)) {
        const double phi1 = residual_norm(xn, sn, zn, yn, mu);
        // Newton reduces the linearized residual, so growth beyond a modest
        // slack means the nonlinear rows overshot; halve and retry.
        if (phi1 <= phi0 * 1.2 + 1e-12 || phi1 < 1e-10) {
          x = std::move(xn);
          s = std::move(sn);
          z = std::move(zn);
          if (neq_ > 0) y = std::move(yn);
          stepped = (ap > 1e-8);
          break;
        }
      }
      ap *= 0.5;
      ad *= 0.5;
      if (ap < 1e-12) break;
    }
    stalls = stepped ? 0 : stalls + 1;
    if (stalls >= 4) {
      eval_rows(x);
      SolverResult out;
      if (try_polish_finish(it, &out)) return out;
      if (try_restart()) continue;
      break;
    }
  }

  // Loop exhausted or aborted: judge the best iterate seen, not the last.
  x = x_best;
  s = s_best;
  z = z_best;
  y = y_best;
  {
    eval_rows(x);
    Eigen::VectorXd rd = c_;
    for (int j = 0; j < m_; ++j) {
      const Row& r = rows_[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < r.support.size(); ++i) rd(r.support[i]) += z(j) * r.grad[i];
    }
    if (neq_ > 0) rd += aeq_.transpose() * y;
    double rp_inf = 0.0, s_inf = 0.0;
    for (int j = 0; j < m_; ++j) {
      rp_inf = std::max(rp_inf, std::abs(rows_[static_cast<std::size_t>(j)].g + s(j)));
      s_inf = std::max(s_inf, s(j));
    }
    const double gap = s.dot(z) / m_;
    const double kkt_now =
        std::max({rd.cwiseAbs().maxCoeff() / obj_scale, rp_inf / (1.0 + s_inf),
                  neq_ > 0 ? (aeq_ * x - beq_).cwiseAbs().maxCoeff() : 0.0,
                  gap / (1.0 + std::abs(c_.dot(x)))});
    if (kkt_now <= opts_.tol_accept)
      return finish(SolveStatus::Optimal, &x, opts_.max_iters, kkt_now);

    SolverResult out;
    if (try_polish_finish(opts_.max_iters, &out)) return out;

    if (p_.max_violation(x) <= 1e-6)
      return finish(SolveStatus::NumericalFailure, nullptr, opts_.max_iters, kkt_now);
  }

  if (opts_.allow_phase1) {
    SolverResult ph = run_phase1();
    if (ph.status != SolveStatus::NumericalFailure) {
      ph.solve_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
              .count();
      return ph;
    }
  }
  return finish(SolveStatus::NumericalFailure, nullptr, opts_.max_iters, kkt_best);
}

// Minimizes the worst constraint violation t; a strictly positive optimum
// certifies primal infeasibility, otherwise the main solve is retried from
// the feasible point found.
SolverResult Ipm::run_phase1() {
  ConvexProgram relax;
  for (int v = 0; v < n_; ++v)
    relax.add_variable(p_.lower_bound(v), p_.upper_bound(v));
  const int tv = relax.add_variable(-1.0, kInf, "t");
  relax.add_objective(tv, -1.0);  // maximize -t == minimize t

  for (const auto& con : p_.affine_cons()) {
    AffineExpr e = con.expr;
    e.add(tv, -1.0);
    relax.add_affine_le(std::move(e));
  }
  for (const auto& con : p_.equality_cons()) {
    AffineExpr e1 = con.expr;
    e1.add(tv, -1.0);
    relax.add_affine_le(std::move(e1));
    AffineExpr e2 = con.expr * -1.0;
    e2.add(tv, -1.0);
    relax.add_affine_le(std::move(e2));
  }
  for (const auto& con : p_.quad_cons()) {
    AffineExpr b = con.bound;
    b.add(tv, 1.0);
    relax.add_quad_le(con.vec, std::move(b));
  }
  for (const auto& con : p_.log_cons()) {
    AffineExpr l = con.lhs;
    l.add(tv, -1.0);
    relax.add_log_le(std::move(l), con.scale, con.arg);
  }

  Eigen::VectorXd x0 = p_.initial_point();
  for (int v = 0; v < n_; ++v) x0(v) = std::clamp(x0(v), p_.lower_bound(v), p_.upper_bound(v));
  if (!repair_domain(x0)) {
    SolverResult r;
    r.status = SolveStatus::NumericalFailure;
    return r;
  }
  for (int v = 0; v < n_; ++v) relax.set_initial(v, x0(v));
  relax.set_initial(tv, std::max(1.0, 1.1 * relax.max_violation(x0)));

  SolverOptions o = opts_;
  o.allow_phase1 = false;
  o.max_iters = std::max(opts_.max_iters, 80);
  const SolverResult ph = solve(relax, o);
  if (ph.status != SolveStatus::Optimal) {
    SolverResult r;
    r.status = SolveStatus::NumericalFailure;
    return r;
  }
  if (ph.x(tv) > 1e-6) {
    SolverResult r;
    r.status = SolveStatus::Infeasible;
    r.iterations = ph.iterations;
    r.kkt_residual = ph.kkt_residual;
    return r;
  }
  // Feasible after all: retry the real program from the recovered point.
  SolverOptions o2 = opts_;
  o2.allow_phase1 = false;
  ConvexProgram copy = p_;
  for (int v = 0; v < n_; ++v) copy.set_initial(v, ph.x(v));
  return solve(copy, o2);
}

}  // namespace

SolverResult solve(const ConvexProgram& p, const SolverOptions& opts) {
  Ipm ipm(p, opts);
  return ipm.run();
}

}  // namespace cfnoma::convex
