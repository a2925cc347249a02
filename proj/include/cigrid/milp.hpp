#pragma once

// Mixed-integer linear programming: model container plus best-bound
// branch-and-bound over the LP relaxation. Fractional zero-cost binaries
// whose constraints admit an integral rounding (complementarity gates) are
// repaired in place instead of branched on.

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "cigrid/errors.hpp"
#include "cigrid/lp.hpp"

namespace cigrid {

enum class VarKind { continuous, binary };
enum class Relation { le, eq, ge };

struct MilpVariable {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lb = -lp::kInf;
  double ub = lp::kInf;
  int branch_priority = 0;  // higher branches first
};

struct MilpConstraint {
  std::string name;
  std::vector<std::pair<int, double>> coeffs;
  Relation rel = Relation::le;
  double rhs = 0.0;
};

enum class MilpStatus { optimal, infeasible, unbounded, limit };

struct MilpModel {
  std::vector<MilpVariable> variables;
  std::vector<MilpConstraint> constraints;
  bool maximize = false;
  std::vector<std::pair<int, double>> objective;

  int add_variable(const std::string& name, VarKind kind, double lb, double ub) {
    if (kind == VarKind::binary && (lb < 0.0 || ub > 1.0))
      fail(errc::bad_model, "binary variable '" + name + "' must have bounds within [0,1]");
    variables.push_back({name, kind, lb, ub});
    return static_cast<int>(variables.size()) - 1;
  }

  int add_constraint(const std::string& name, std::vector<std::pair<int, double>> coeffs,
                     Relation rel, double rhs) {
    for (auto [j, v] : coeffs)
      if (j < 0 || j >= static_cast<int>(variables.size()))
        fail(errc::bad_model, "constraint '" + name + "' references undeclared variable");
    constraints.push_back({name, std::move(coeffs), rel, rhs});
    return static_cast<int>(constraints.size()) - 1;
  }

  void set_objective(bool maximize_sense, std::vector<std::pair<int, double>> coeffs) {
    for (auto [j, v] : coeffs)
      if (j < 0 || j >= static_cast<int>(variables.size()))
        fail(errc::bad_model, "objective references undeclared variable");
    maximize = maximize_sense;
    objective = std::move(coeffs);
  }

  int index_of(const std::string& name) const {
    for (std::size_t j = 0; j < variables.size(); ++j)
      if (variables[j].name == name) return static_cast<int>(j);
    return -1;
  }
};

struct MilpLimits {
  long node_cap = 2'000'000;
  double time_cap_seconds = 600.0;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::limit;
  Eigen::VectorXd values;  // empty when no incumbent
  double objective_value = 0.0;
  long node_count = 0;
  double gap = std::numeric_limits<double>::infinity();

  bool has_values() const { return values.size() > 0; }
  double value(const MilpModel& model, const std::string& name) const {
    int j = model.index_of(name);
    if (j < 0 || !has_values()) fail(errc::bad_model, "no value for variable '" + name + "'");
    return values[j];
  }
};

struct MilpOptions {
  double integrality_eps = 1e-6;
  double feasibility_eps = 1e-6;
  lp::Options lp;
  // Given a node relaxation point, may propose a full feasible assignment
  // (an incumbent). The engine re-verifies bounds, integrality, and every
  // constraint before accepting, so a wrong proposal cannot corrupt results.
  std::function<bool(const Eigen::VectorXd& relaxation, Eigen::VectorXd& candidate)>
      incumbent_heuristic;
  // May name the binary to branch on at a node; return -1 to fall back to
  // the priority/most-fractional rule. Ignored unless the named variable is
  // fractional at the node.
  std::function<int(const Eigen::VectorXd& relaxation)> branch_hint;
};

namespace detail {

inline lp::Problem to_lp(const MilpModel& m) {
  lp::Problem p;
  p.num_vars = static_cast<int>(m.variables.size());
  p.c = Eigen::VectorXd::Zero(p.num_vars);
  p.lb.resize(p.num_vars);
  p.ub.resize(p.num_vars);
  for (int j = 0; j < p.num_vars; ++j) {
    p.lb[j] = m.variables[j].lb;
    p.ub[j] = m.variables[j].ub;
  }
  double sign = m.maximize ? -1.0 : 1.0;
  for (auto [j, v] : m.objective) p.c[j] += sign * v;
  for (const auto& con : m.constraints) {
    lp::Row row;
    row.coeffs = con.coeffs;
    switch (con.rel) {
      case Relation::le: row.ub = con.rhs; break;
      case Relation::ge: row.lb = con.rhs; break;
      case Relation::eq: row.lb = row.ub = con.rhs; break;
    }
    p.rows.push_back(std::move(row));
  }
  return p;
}

inline double constraint_activity(const MilpConstraint& con, const Eigen::VectorXd& x) {
  double a = 0.0;
  for (auto [j, v] : con.coeffs) a += v * x[j];
  return a;
}

inline double constraint_violation(const MilpConstraint& con, const Eigen::VectorXd& x) {
  double a = constraint_activity(con, x);
  switch (con.rel) {
    case Relation::le: return std::max(0.0, a - con.rhs);
    case Relation::ge: return std::max(0.0, con.rhs - a);
    case Relation::eq: return std::abs(a - con.rhs);
  }
  return 0.0;
}

}  // namespace detail

inline MilpSolution solve_lp_relaxation(const MilpModel& model, const MilpOptions& opt = {}) {
  lp::Problem p = detail::to_lp(model);
  lp::Solution s = lp::solve(p, opt.lp);
  MilpSolution out;
  out.node_count = 1;
  switch (s.status) {
    case lp::Status::optimal:
      out.status = MilpStatus::optimal;
      out.values = s.x;
      out.objective_value = model.maximize ? -s.objective : s.objective;
      out.gap = 0.0;
      break;
    case lp::Status::infeasible:
      out.status = MilpStatus::infeasible;
      break;
    case lp::Status::unbounded:
      out.status = MilpStatus::unbounded;
      break;
    default:
      fail(errc::lp_failed, "LP solve failed (iteration limit or numerical failure)");
  }
  return out;
}

inline MilpSolution solve_milp(const MilpModel& model, const MilpLimits& limits = {},
                               const MilpOptions& opt = {}) {
  lp::Problem base = detail::to_lp(model);
  const int nv = base.num_vars;
  std::vector<int> binaries;
  for (int j = 0; j < nv; ++j)
    if (model.variables[j].kind == VarKind::binary) binaries.push_back(j);

  // constraints touching each binary, for the rounding repair
  std::vector<std::vector<int>> touching(nv);
  for (std::size_t i = 0; i < model.constraints.size(); ++i)
    for (auto [j, v] : model.constraints[i].coeffs)
      if (model.variables[j].kind == VarKind::binary && v != 0.0)
        touching[j].push_back(static_cast<int>(i));
  Eigen::VectorXd obj_coeff = Eigen::VectorXd::Zero(nv);
  {
    double sign = model.maximize ? -1.0 : 1.0;
    for (auto [j, v] : model.objective) obj_coeff[j] += sign * v;
  }
  // integral objectives (integer weights on binaries only) admit ceil-rounded
  // bounds, which prunes aggressively when optima are small integers
  bool integral_objective = true;
  for (int j = 0; j < nv; ++j) {
    if (obj_coeff[j] == 0.0) continue;
    if (model.variables[j].kind != VarKind::binary ||
        obj_coeff[j] != std::round(obj_coeff[j])) {
      integral_objective = false;
      break;
    }
  }
  auto effective = [&](double bound) {
    return integral_objective && std::isfinite(bound) ? std::ceil(bound - 1e-6) : bound;
  };

  struct Node {
    double bound;
    long id;
    std::vector<std::pair<int, double>> fixings;  // (var, value)
    lp::Basis basis;
  };
  struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;
      return a.id < b.id;  // equal bounds: dive into the newest node
    }
  };
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;

  MilpSolution out;
  double incumbent = std::numeric_limits<double>::infinity();  // minimization
  Eigen::VectorXd incumbent_x;
  long next_id = 0;
  long nodes = 0;
  bool hit_limit = false;
  auto deadline =
      std::chrono::steady_clock::now() +
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(limits.time_cap_seconds));

  open.push({-std::numeric_limits<double>::infinity(), next_id++, {}, {}});

  double best_open_bound = -std::numeric_limits<double>::infinity();
  while (!open.empty()) {
    if (nodes >= limits.node_cap || std::chrono::steady_clock::now() > deadline) {
      hit_limit = true;
      best_open_bound = open.top().bound;
      break;
    }
    Node node = open.top();
    open.pop();
    if (effective(node.bound) >= incumbent - 1e-9) continue;  // pruned by a newer incumbent
    ++nodes;

    lp::Problem p = base;
    for (auto [j, v] : node.fixings) {
      p.lb[j] = v;
      p.ub[j] = v;
    }
    lp::Solution s = lp::solve(p, opt.lp, node.basis.valid() ? &node.basis : nullptr);
    if (s.status == lp::Status::iteration_limit || s.status == lp::Status::numerical_failure) {
      // one retry from a cold basis before giving up on the node
      s = lp::solve(p, opt.lp);
      if (s.status == lp::Status::iteration_limit || s.status == lp::Status::numerical_failure)
        fail(errc::lp_failed, "LP solve failed inside branch-and-bound");
    }
    if (s.status == lp::Status::infeasible) continue;
    if (s.status == lp::Status::unbounded) {
      out.status = MilpStatus::unbounded;
      out.node_count = nodes;
      return out;
    }
    if (effective(s.objective) >= incumbent - 1e-9) continue;

    if (opt.incumbent_heuristic) {
      Eigen::VectorXd cand;
      if (opt.incumbent_heuristic(s.x, cand) && cand.size() == nv) {
        bool ok = true;
        for (int j = 0; j < nv && ok; ++j) {
          const auto& v = model.variables[j];
          if (cand[j] < v.lb - opt.feasibility_eps || cand[j] > v.ub + opt.feasibility_eps)
            ok = false;
          if (v.kind == VarKind::binary &&
              std::abs(cand[j] - std::round(cand[j])) > opt.integrality_eps)
            ok = false;
        }
        for (std::size_t ci = 0; ci < model.constraints.size() && ok; ++ci)
          if (detail::constraint_violation(model.constraints[ci], cand) > opt.feasibility_eps)
            ok = false;
        if (ok) {
          double obj = obj_coeff.dot(cand);
          if (obj < incumbent - 1e-12) {
            incumbent = obj;
            incumbent_x = cand;
          }
        }
      }
      if (effective(s.objective) >= incumbent - 1e-9) continue;
    }

    // integrality check with rounding repair for zero-cost gate binaries
    Eigen::VectorXd x = s.x;
    int branch_var = -1;
    double branch_frac = -1.0;
    int branch_pri = std::numeric_limits<int>::min();
    for (int j : binaries) {
      double frac = std::abs(x[j] - std::round(x[j]));
      if (frac <= opt.integrality_eps) {
        x[j] = std::round(x[j]);
        continue;
      }
      bool repaired = false;
      if (obj_coeff[j] == 0.0) {
        double prefer = std::round(x[j]);
        for (double candidate : {prefer, 1.0 - prefer}) {
          double old = x[j];
          x[j] = candidate;
          bool ok = true;
          for (int ci : touching[j])
            if (detail::constraint_violation(model.constraints[ci], x) > opt.feasibility_eps) {
              ok = false;
              break;
            }
          if (ok) {
            repaired = true;
            break;
          }
          x[j] = old;
        }
      }
      if (!repaired) {
        int pri = model.variables[j].branch_priority;
        if (branch_var < 0 || pri > branch_pri ||
            (pri == branch_pri && frac > branch_frac + 1e-12)) {
          branch_pri = pri;
          branch_frac = frac;
          branch_var = j;
        }
      }
    }

    if (branch_var >= 0 && opt.branch_hint) {
      int j = opt.branch_hint(s.x);
      if (j >= 0 && j < nv && model.variables[j].kind == VarKind::binary &&
          std::abs(s.x[j] - std::round(s.x[j])) > opt.integrality_eps &&
          std::abs(x[j] - std::round(x[j])) > opt.integrality_eps)
        branch_var = j;
    }

    if (branch_var < 0) {
      // full feasibility check of the (possibly repaired) point
      bool ok = true;
      for (const auto& con : model.constraints)
        if (detail::constraint_violation(con, x) > opt.feasibility_eps) {
          ok = false;
          break;
        }
      if (ok) {
        double obj = obj_coeff.dot(x);
        if (obj < incumbent - 1e-12) {
          incumbent = obj;
          incumbent_x = x;
        }
        continue;
      }
      // repair produced an infeasible point (shouldn't happen; branch lowest fractional)
      for (int j : binaries) {
        double frac = std::abs(s.x[j] - std::round(s.x[j]));
        if (frac > opt.integrality_eps) {
          branch_var = j;
          break;
        }
      }
      if (branch_var < 0) continue;  // numerically integral yet infeasible: drop node
    }

    for (double v : {0.0, 1.0}) {
      Node child;
      child.bound = s.objective;
      child.id = next_id++;
      child.fixings = node.fixings;
      child.fixings.emplace_back(branch_var, v);
      child.basis = s.basis;
      if (effective(child.bound) < incumbent - 1e-9) open.push(std::move(child));
    }
  }

  out.node_count = nodes;
  bool have_incumbent = std::isfinite(incumbent);
  if (hit_limit) {
    out.status = MilpStatus::limit;
    if (have_incumbent) {
      out.values = incumbent_x;
      out.objective_value = model.maximize ? -incumbent : incumbent;
      out.gap = std::abs(incumbent - best_open_bound) / std::max(1.0, std::abs(incumbent));
    }
    return out;
  }
  if (!have_incumbent) {
    out.status = MilpStatus::infeasible;
    return out;
  }
  out.status = MilpStatus::optimal;
  out.values = incumbent_x;
  out.objective_value = model.maximize ? -incumbent : incumbent;
  out.gap = 0.0;
  return out;
}

/// Write-only LP-format-like dump for external cross-checking.
inline std::string dump_lp_format(const MilpModel& m) {
  std::ostringstream os;
  os << (m.maximize ? "Maximize\n obj:" : "Minimize\n obj:");
  for (auto [j, v] : m.objective)
    os << (v >= 0 ? " + " : " - ") << std::abs(v) << " " << m.variables[j].name;
  os << "\nSubject To\n";
  for (const auto& con : m.constraints) {
    os << " " << con.name << ":";
    for (auto [j, v] : con.coeffs)
      os << (v >= 0 ? " + " : " - ") << std::abs(v) << " " << m.variables[j].name;
    switch (con.rel) {
      case Relation::le: os << " <= "; break;
      case Relation::ge: os << " >= "; break;
      case Relation::eq: os << " = "; break;
    }
    os << con.rhs << "\n";
  }
  os << "Bounds\n";
  for (const auto& v : m.variables)
    os << " " << v.lb << " <= " << v.name << " <= " << v.ub << "\n";
  os << "Binaries\n";
  for (const auto& v : m.variables)
    if (v.kind == VarKind::binary) os << " " << v.name;
  os << "\nEnd\n";
  return os.str();
}

}  // namespace cigrid
