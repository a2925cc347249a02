#pragma once

// Strictly convex dense QP via a primal active-set method. A feasible start
// comes from the simplex phase 1; equality-constrained subproblems are solved
// through the bordered KKT system. Returns exact multipliers.

#include <Eigen/Dense>
#include <vector>

#include "cigrid/errors.hpp"
#include "cigrid/lp.hpp"

namespace cigrid::qp {

/// min ½ x'Qx + c'x  s.t.  Aeq x = beq,  G x <= h,  lb <= x <= ub
struct Problem {
  Eigen::MatrixXd q;  // symmetric positive definite
  Eigen::VectorXd c;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd g;
  Eigen::VectorXd h;
  Eigen::VectorXd lb, ub;
};

enum class Status { optimal, infeasible, iteration_limit, numerical_failure };

struct Solution {
  Status status = Status::numerical_failure;
  Eigen::VectorXd x;
  double objective = 0.0;
  Eigen::VectorXd eq_duals;    // mu: Qx + c + Aeq' mu + G' lam - lam_lo + lam_hi = 0
  Eigen::VectorXd ineq_duals;  // lam >= 0
  Eigen::VectorXd lower_duals, upper_duals;  // >= 0
  int iterations = 0;
};

struct Options {
  int max_iterations = 10000;
  double feas_tol = 1e-9;
  double dual_tol = 1e-9;
  // phase-1 objective for the feasible-point LP; lets callers vary the
  // starting vertex to exercise uniqueness
  Eigen::VectorXd start_bias;
};

namespace detail {

// Unified inequality row view: g-rows first, then -x <= -lb, then x <= ub.
struct RowView {
  const Problem& p;
  int n, ng;
  RowView(const Problem& prob)
      : p(prob), n(static_cast<int>(prob.c.size())), ng(static_cast<int>(prob.h.size())) {}
  int count() const { return ng + 2 * n; }
  double dot(int r, const Eigen::VectorXd& x) const {
    if (r < ng) return p.g.row(r).dot(x);
    int j = r - ng;
    return j < n ? -x[j] : x[j - n];
  }
  double rhs(int r) const {
    if (r < ng) return p.h[r];
    int j = r - ng;
    return j < n ? -p.lb[j] : p.ub[j - n];
  }
  Eigen::VectorXd gradient(int r) const {
    if (r < ng) return p.g.row(r).transpose();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    int j = r - ng;
    if (j < n)
      e[j] = -1.0;
    else
      e[j - n] = 1.0;
    return e;
  }
  bool finite(int r) const { return std::isfinite(rhs(r)); }
};

inline bool feasible_start(const Problem& p, const Options& opt, Eigen::VectorXd& x0) {
  lp::Problem f;
  f.num_vars = static_cast<int>(p.c.size());
  f.c = opt.start_bias.size() == f.num_vars ? opt.start_bias
                                            : Eigen::VectorXd::Zero(f.num_vars);
  f.lb = p.lb;
  f.ub = p.ub;
  for (int i = 0; i < p.a_eq.rows(); ++i) {
    lp::Row r;
    for (int j = 0; j < f.num_vars; ++j)
      if (p.a_eq(i, j) != 0.0) r.coeffs.emplace_back(j, p.a_eq(i, j));
    r.lb = r.ub = p.b_eq[i];
    f.rows.push_back(std::move(r));
  }
  for (int i = 0; i < p.g.rows(); ++i) {
    if (!std::isfinite(p.h[i])) continue;
    lp::Row r;
    for (int j = 0; j < f.num_vars; ++j)
      if (p.g(i, j) != 0.0) r.coeffs.emplace_back(j, p.g(i, j));
    r.ub = p.h[i];
    f.rows.push_back(std::move(r));
  }
  lp::Solution s = lp::solve(f);
  if (s.status == lp::Status::infeasible) return false;
  if (s.status != lp::Status::optimal && s.status != lp::Status::unbounded)
    fail(errc::lp_failed, "feasible-point LP failed");
  if (s.status == lp::Status::unbounded) {
    // bias objective unbounded over the feasible region; retry unbiased
    f.c.setZero();
    s = lp::solve(f);
    if (s.status != lp::Status::optimal)
      fail(errc::lp_failed, "feasible-point LP failed");
  }
  x0 = s.x;
  return true;
}

}  // namespace detail

inline Solution solve(const Problem& p, const Options& opt = {}) {
  const int n = static_cast<int>(p.c.size());
  if (p.q.rows() != n || p.q.cols() != n || p.lb.size() != n || p.ub.size() != n ||
      p.a_eq.cols() != (p.a_eq.rows() ? n : p.a_eq.cols()) ||
      static_cast<int>(p.b_eq.size()) != p.a_eq.rows() ||
      static_cast<int>(p.h.size()) != p.g.rows())
    fail(errc::bad_model, "QP dimensions disagree");

  Solution sol;
  Eigen::VectorXd x;
  if (!detail::feasible_start(p, opt, x)) {
    sol.status = Status::infeasible;
    return sol;
  }

  detail::RowView rows(p);
  const int neq = static_cast<int>(p.a_eq.rows());
  std::vector<int> working;  // active inequality rows
  std::vector<char> in_working(rows.count(), 0);
  for (int r = 0; r < rows.count(); ++r)
    if (rows.finite(r) && rows.dot(r, x) > rows.rhs(r) + opt.feas_tol)
      fail(errc::lp_failed, "phase-1 point violates an inequality");

  Eigen::VectorXd lam_w;  // multipliers of equalities then working rows
  for (sol.iterations = 0; sol.iterations < opt.max_iterations; ++sol.iterations) {
    int nw = static_cast<int>(working.size());
    int dim = n + neq + nw;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
    kkt.topLeftCorner(n, n) = p.q;
    for (int i = 0; i < neq; ++i) {
      kkt.block(n + i, 0, 1, n) = p.a_eq.row(i);
      kkt.block(0, n + i, n, 1) = p.a_eq.row(i).transpose();
    }
    for (int k = 0; k < nw; ++k) {
      Eigen::VectorXd grad = rows.gradient(working[k]);
      kkt.block(n + neq + k, 0, 1, n) = grad.transpose();
      kkt.block(0, n + neq + k, n, 1) = grad;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    rhs.head(n) = -(p.q * x + p.c);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) {
      // dependent working set; drop the most recent inequality
      if (nw == 0) {
        sol.status = Status::numerical_failure;
        return sol;
      }
      in_working[working.back()] = 0;
      working.pop_back();
      continue;
    }
    Eigen::VectorXd step = lu.solve(rhs);
    Eigen::VectorXd pdir = step.head(n);
    lam_w = step.tail(neq + nw);

    if (pdir.lpNorm<Eigen::Infinity>() <= opt.feas_tol) {
      // stationary on the working set; check multiplier signs
      int drop = -1;
      double most_neg = -opt.dual_tol;
      for (int k = 0; k < nw; ++k)
        if (lam_w[neq + k] < most_neg) {
          most_neg = lam_w[neq + k];
          drop = k;
        }
      if (drop < 0) {
        sol.status = Status::optimal;
        sol.x = x;
        sol.objective = 0.5 * x.dot(p.q * x) + p.c.dot(x);
        sol.eq_duals = lam_w.head(neq);
        sol.ineq_duals = Eigen::VectorXd::Zero(p.g.rows());
        sol.lower_duals = Eigen::VectorXd::Zero(n);
        sol.upper_duals = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < nw; ++k) {
          int r = working[k];
          double v = std::max(0.0, lam_w[neq + k]);
          if (r < rows.ng)
            sol.ineq_duals[r] = v;
          else if (r - rows.ng < n)
            sol.lower_duals[r - rows.ng] = v;
          else
            sol.upper_duals[r - rows.ng - n] = v;
        }
        return sol;
      }
      in_working[working[drop]] = 0;
      working.erase(working.begin() + drop);
      continue;
    }

    // step length limited by the nearest inactive inequality
    double alpha = 1.0;
    int blocking = -1;
    for (int r = 0; r < rows.count(); ++r) {
      if (in_working[r] || !rows.finite(r)) continue;
      double advance = rows.dot(r, pdir);
      if (advance <= opt.feas_tol) continue;
      double room = rows.rhs(r) - rows.dot(r, x);
      double a = std::max(0.0, room) / advance;
      if (a < alpha - 1e-14) {
        alpha = a;
        blocking = r;
      }
    }
    x += alpha * pdir;
    if (blocking >= 0) {
      working.push_back(blocking);
      in_working[blocking] = 1;
    }
  }
  sol.status = Status::iteration_limit;
  return sol;
}

}  // namespace cigrid::qp
