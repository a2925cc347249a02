#pragma once

// Bounded-variable revised simplex. Two-phase primal method with a composite
// phase 1, dense LU basis factorization and product-form eta updates.
// Desk-scale by design: correctness over speed.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "cigrid/errors.hpp"

namespace cigrid::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Row {
  std::vector<std::pair<int, double>> coeffs;  // (variable, coefficient)
  double lb = -kInf;
  double ub = kInf;
};

/// min c'x  s.t.  row.lb <= a'x <= row.ub,  lb <= x <= ub
struct Problem {
  int num_vars = 0;
  Eigen::VectorXd c;
  Eigen::VectorXd lb, ub;
  std::vector<Row> rows;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

enum class VarState : std::uint8_t { basic, at_lower, at_upper, free_at_zero };

struct Basis {
  std::vector<int> basic;          // one variable per row
  std::vector<VarState> state;     // per variable (structurals then logicals)
  bool valid() const { return !basic.empty(); }
};

struct Solution {
  Status status = Status::numerical_failure;
  Eigen::VectorXd x;           // structural values
  double objective = 0.0;
  Eigen::VectorXd row_duals;   // y: c = A'y + reduced costs at optimality
  Eigen::VectorXd reduced_costs;
  Basis basis;                 // warm-start token
  int iterations = 0;
};

struct Options {
  int max_iterations = 50000;
  double feas_tol = 1e-7;
  double opt_tol = 1e-7;
  double pivot_tol = 1e-9;
  int refactor_every = 100;
};

namespace detail {

class SimplexSolver {
 public:
  SimplexSolver(const Problem& p, const Options& opt) : p_(p), opt_(opt) {
    n_ = p.num_vars;
    r_ = static_cast<int>(p.rows.size());
    total_ = n_ + r_;
    a_ = Eigen::MatrixXd::Zero(r_, n_);
    for (int i = 0; i < r_; ++i)
      for (auto [j, v] : p.rows[i].coeffs) a_(i, j) += v;
    lb_.resize(total_);
    ub_.resize(total_);
    for (int j = 0; j < n_; ++j) {
      lb_[j] = p.lb[j];
      ub_[j] = p.ub[j];
    }
    for (int i = 0; i < r_; ++i) {
      lb_[n_ + i] = p.rows[i].lb;
      ub_[n_ + i] = p.rows[i].ub;
    }
    cost_ = Eigen::VectorXd::Zero(total_);
    cost_.head(n_) = p.c;
  }

  Solution run(const Basis* warm) {
    Solution sol;
    if (!init_basis(warm)) {
      sol.status = Status::numerical_failure;
      return sol;
    }
    compute_basic_values();

    Status st = phase1();
    if (st == Status::optimal) st = phase2();
    sol.status = st;
    sol.iterations = iters_;
    if (st != Status::optimal && st != Status::unbounded) {
      sol.basis = export_basis();
      return sol;
    }

    sol.x = Eigen::VectorXd(n_);
    for (int j = 0; j < n_; ++j) sol.x[j] = value_of(j);
    sol.objective = p_.c.dot(sol.x);
    Eigen::VectorXd y = btran(basic_costs(cost_));
    sol.row_duals = y;
    sol.reduced_costs = p_.c - a_.transpose() * y;
    sol.basis = export_basis();
    return sol;
  }

 private:
  const Problem& p_;
  Options opt_;
  int n_ = 0, r_ = 0, total_ = 0;
  Eigen::MatrixXd a_;
  Eigen::VectorXd lb_, ub_, cost_;

  std::vector<int> basic_;
  std::vector<int> pos_in_basis_;  // -1 when nonbasic
  std::vector<VarState> state_;
  Eigen::VectorXd xb_;  // values of basic variables

  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  struct Eta {
    int pos;
    Eigen::VectorXd w;
  };
  std::vector<Eta> etas_;
  int iters_ = 0;
  int degenerate_run_ = 0;
  bool bland_ = false;

  Eigen::VectorXd column(int j) const {
    if (j < n_) return a_.col(j);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(r_);
    e[j - n_] = -1.0;
    return e;
  }

  double bound_value(int j, VarState s) const {
    switch (s) {
      case VarState::at_lower: return lb_[j];
      case VarState::at_upper: return ub_[j];
      default: return 0.0;
    }
  }

  double value_of(int j) const {
    return state_[j] == VarState::basic ? xb_[pos_in_basis_[j]] : bound_value(j, state_[j]);
  }

  bool init_basis(const Basis* warm) {
    basic_.assign(r_, 0);
    state_.assign(total_, VarState::at_lower);
    if (warm && warm->valid() && static_cast<int>(warm->basic.size()) == r_ &&
        static_cast<int>(warm->state.size()) == total_) {
      basic_ = warm->basic;
      state_ = warm->state;
      for (int j = 0; j < total_; ++j) {
        if (state_[j] == VarState::basic) continue;
        // bounds may have changed between solves (branching); keep states legal
        if (state_[j] == VarState::at_lower && !std::isfinite(lb_[j]))
          state_[j] = std::isfinite(ub_[j]) ? VarState::at_upper : VarState::free_at_zero;
        else if (state_[j] == VarState::at_upper && !std::isfinite(ub_[j]))
          state_[j] = std::isfinite(lb_[j]) ? VarState::at_lower : VarState::free_at_zero;
        else if (state_[j] == VarState::free_at_zero && std::isfinite(lb_[j]))
          state_[j] = VarState::at_lower;
      }
      if (refactor()) {
        pos_in_basis_.assign(total_, -1);
        for (int i = 0; i < r_; ++i) pos_in_basis_[basic_[i]] = i;
        return true;
      }
    }
    // all-logical start
    for (int i = 0; i < r_; ++i) basic_[i] = n_ + i;
    for (int j = 0; j < total_; ++j) {
      if (j >= n_) {
        state_[j] = VarState::basic;
      } else if (std::isfinite(lb_[j])) {
        state_[j] = VarState::at_lower;
      } else if (std::isfinite(ub_[j])) {
        state_[j] = VarState::at_upper;
      } else {
        state_[j] = VarState::free_at_zero;
      }
    }
    pos_in_basis_.assign(total_, -1);
    for (int i = 0; i < r_; ++i) pos_in_basis_[basic_[i]] = i;
    return refactor();
  }

  bool refactor() {
    Eigen::MatrixXd b(r_, r_);
    for (int i = 0; i < r_; ++i) b.col(i) = column(basic_[i]);
    lu_.compute(b);
    etas_.clear();
    double min_piv = kInf, max_piv = 0.0;
    const auto& m = lu_.matrixLU();
    for (int i = 0; i < r_; ++i) {
      min_piv = std::min(min_piv, std::abs(m(i, i)));
      max_piv = std::max(max_piv, std::abs(m(i, i)));
    }
    return r_ == 0 || (min_piv > 0 && min_piv > 1e-13 * std::max(1.0, max_piv));
  }

  Eigen::VectorXd ftran(Eigen::VectorXd v) const {
    v = lu_.solve(v);
    for (const auto& e : etas_) {
      double vp = v[e.pos] / e.w[e.pos];
      v -= vp * e.w;
      v[e.pos] = vp;
    }
    return v;
  }

  Eigen::VectorXd btran(Eigen::VectorXd v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = it->w.dot(v);
      v[it->pos] += (v[it->pos] - s) / it->w[it->pos];
    }
    return lu_.transpose().solve(v);
  }

  void compute_basic_values() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r_);
    for (int j = 0; j < n_; ++j) {
      double v = state_[j] == VarState::basic ? 0.0 : bound_value(j, state_[j]);
      if (v != 0.0) rhs -= a_.col(j) * v;
    }
    for (int i = 0; i < r_; ++i) {
      int j = n_ + i;
      if (state_[j] != VarState::basic) {
        double v = bound_value(j, state_[j]);
        if (v != 0.0) rhs[i] += v;  // column is -e_i
      }
    }
    xb_ = ftran(rhs);
  }

  Eigen::VectorXd basic_costs(const Eigen::VectorXd& c) const {
    Eigen::VectorXd cb(r_);
    for (int i = 0; i < r_; ++i) cb[i] = c[basic_[i]];
    return cb;
  }

  // One simplex iteration for the given cost vector. Returns:
  //  0 = pivoted, 1 = optimal for this cost, 2 = unbounded, 3 = failure
  int iterate(const Eigen::VectorXd& c, bool phase1) {
    Eigen::VectorXd y = btran(basic_costs(c));
    Eigen::VectorXd d_struct = c.head(n_) - a_.transpose() * y;

    int enter = -1;
    int dir = 0;
    double best = bland_ ? 0.0 : opt_.opt_tol;
    for (int j = 0; j < total_; ++j) {
      if (state_[j] == VarState::basic) continue;
      double d = j < n_ ? d_struct[j] : c[j] + y[j - n_];
      bool can_up = state_[j] == VarState::at_lower || state_[j] == VarState::free_at_zero;
      bool can_down = state_[j] == VarState::at_upper || state_[j] == VarState::free_at_zero;
      if (bland_) {
        if (can_up && d < -opt_.opt_tol) { enter = j; dir = 1; break; }
        if (can_down && d > opt_.opt_tol) { enter = j; dir = -1; break; }
      } else {
        if (can_up && -d > best) { best = -d; enter = j; dir = 1; }
        if (can_down && d > best) { best = d; enter = j; dir = -1; }
      }
    }
    if (enter < 0) return 1;

    Eigen::VectorXd w = ftran(column(enter));

    // ratio test: entering moves by dir * t, basics by -dir * w * t
    double t_max = ub_[enter] - lb_[enter];  // bound flip distance
    if (!std::isfinite(t_max)) t_max = kInf;
    int leave_pos = -1;
    double leave_piv = 0.0;
    VarState leave_state = VarState::at_lower;
    for (int i = 0; i < r_; ++i) {
      double delta = -dir * w[i];
      if (std::abs(delta) < opt_.pivot_tol) continue;
      int j = basic_[i];
      double limit, ratio;
      VarState target;
      if (delta > 0) {
        // moving up
        if (phase1 && xb_[i] < lb_[j] - opt_.feas_tol) {
          limit = lb_[j];
          target = VarState::at_lower;
        } else if (std::isfinite(ub_[j]) && xb_[i] <= ub_[j] + opt_.feas_tol) {
          limit = ub_[j];
          target = VarState::at_upper;
        } else {
          continue;
        }
        ratio = (limit - xb_[i]) / delta;
      } else {
        if (phase1 && xb_[i] > ub_[j] + opt_.feas_tol) {
          limit = ub_[j];
          target = VarState::at_upper;
        } else if (std::isfinite(lb_[j]) && xb_[i] >= lb_[j] - opt_.feas_tol) {
          limit = lb_[j];
          target = VarState::at_lower;
        } else {
          continue;
        }
        ratio = (limit - xb_[i]) / delta;
      }
      ratio = std::max(ratio, 0.0);
      if (ratio < t_max - 1e-12 ||
          (ratio < t_max + 1e-12 && std::abs(w[i]) > std::abs(leave_piv))) {
        t_max = ratio;
        leave_pos = i;
        leave_piv = w[i];
        leave_state = target;
      }
    }

    if (!std::isfinite(t_max)) return phase1 ? 3 : 2;

    if (t_max < 1e-12) {
      if (++degenerate_run_ > 200) bland_ = true;
    } else {
      degenerate_run_ = 0;
    }

    double enter_value = bound_value(enter, state_[enter]) + dir * t_max;
    xb_ -= (dir * t_max) * w;

    if (leave_pos < 0) {
      // bound flip, basis unchanged
      state_[enter] = state_[enter] == VarState::at_lower ? VarState::at_upper
                                                         : VarState::at_lower;
      return 0;
    }

    int leave_var = basic_[leave_pos];
    state_[leave_var] = leave_state;
    pos_in_basis_[leave_var] = -1;
    basic_[leave_pos] = enter;
    pos_in_basis_[enter] = leave_pos;
    state_[enter] = VarState::basic;
    xb_[leave_pos] = enter_value;
    etas_.push_back({leave_pos, std::move(w)});

    if (static_cast<int>(etas_.size()) >= opt_.refactor_every) {
      if (!refactor()) return 3;
      compute_basic_values();
    }
    return 0;
  }

  Status phase1() {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(total_);
    while (true) {
      if (++iters_ > opt_.max_iterations) return Status::iteration_limit;
      c.setZero();
      bool any_violation = false;
      for (int i = 0; i < r_; ++i) {
        int j = basic_[i];
        double below = lb_[j] - xb_[i];
        double above = xb_[i] - ub_[j];
        if (below > opt_.feas_tol) {
          c[j] = -1.0;
          any_violation = true;
        } else if (above > opt_.feas_tol) {
          c[j] = 1.0;
          any_violation = true;
        }
      }
      if (!any_violation) return Status::optimal;
      int rc = iterate(c, true);
      if (rc == 1) return Status::infeasible;
      if (rc == 2 || rc == 3) return Status::numerical_failure;
    }
  }

  Status phase2() {
    compute_basic_values();  // refresh accumulated drift
    while (true) {
      if (++iters_ > opt_.max_iterations) return Status::iteration_limit;
      int rc = iterate(cost_, false);
      if (rc == 1) return Status::optimal;
      if (rc == 2) return Status::unbounded;
      if (rc == 3) return Status::numerical_failure;
    }
  }

  Basis export_basis() const {
    Basis b;
    b.basic = basic_;
    b.state = state_;
    return b;
  }
};

}  // namespace detail

inline Solution solve(const Problem& p, const Options& opt = {}, const Basis* warm = nullptr) {
  if (static_cast<int>(p.c.size()) != p.num_vars ||
      static_cast<int>(p.lb.size()) != p.num_vars ||
      static_cast<int>(p.ub.size()) != p.num_vars)
    fail(errc::bad_model, "objective/bound vectors must match num_vars");
  for (const auto& row : p.rows)
    for (auto [j, v] : row.coeffs)
      if (j < 0 || j >= p.num_vars) fail(errc::bad_model, "row references undeclared variable");
  detail::SimplexSolver solver(p, opt);
  return solver.run(warm);
}

}  // namespace cigrid::lp
