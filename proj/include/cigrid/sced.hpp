#pragma once

// Security-constrained economic dispatch: strictly convex QP over generator
// outputs with balance, generator-limit, and line-flow constraints. Returns
// the unique dispatch together with full-length duals.
//
// Inequality stacking convention used throughout (length 2(n+m)):
//   [0, n)        lower generator bounds   -Pg <= 0
//   [n, 2n)       upper generator bounds    Pg <= Pg_max
//   [2n, 2n+m)    forward flow limits     F(Pg - Pd~) <= Pf_max
//   [2n+m, 2n+2m) reverse flow limits    -F(Pg - Pd~) <= Pf_max

#include <cmath>
#include <memory>

#include "cigrid/grid.hpp"
#include "cigrid/qp.hpp"

namespace cigrid {

struct ScedProblem {
  const GridModel* model = nullptr;
  Vec demand_measured;  // Pd + a, per-unit
};

inline ScedProblem make_sced_problem(const GridModel& g) { return {&g, g.demand}; }
inline ScedProblem make_sced_problem(const GridModel& g, const Vec& attack) {
  if (attack.size() != g.n) fail(errc::precondition, "attack vector must have one entry per bus");
  return {&g, g.demand + attack};
}

struct ScedSolution {
  Vec p_g;          // length n, per-unit
  double nu = 0.0;  // balance dual, $/MW
  Vec lambda;       // length 2(n+m), stacked as above, >= 0
  Vec flows;        // length m, per-unit
  double objective = 0.0;  // $
};

inline double line_cap(const GridModel& g, int e) {
  double c = g.lines[e].capacity;
  return c > 0.0 ? c : std::numeric_limits<double>::infinity();
}

// start_bias (length n, optional) tilts the feasible-start LP so tests can
// confirm the optimizer is independent of the starting point
inline ScedSolution solve_sced(const ScedProblem& prob, const Tolerances& tol = {},
                               const Vec& start_bias = Vec()) {
  const GridModel& g = *prob.model;
  if (prob.demand_measured.size() != g.n)
    fail(errc::precondition, "measured demand must have one entry per bus");
  std::vector<int> gens = g.generator_buses();
  const int k = static_cast<int>(gens.size());
  for (int i : gens)
    if (g.cost_c2[i] <= 0.0)
      fail(errc::nonconvex_cost, "c2 must be positive at generator buses");

  qp::Problem q;
  q.q = Mat::Zero(k, k);
  q.c.resize(k);
  q.lb = Vec::Zero(k);
  q.ub.resize(k);
  for (int j = 0; j < k; ++j) {
    q.q(j, j) = 2.0 * g.cost_c2[gens[j]];  // objective is c2 Pg^2 + c1 Pg + c0
    q.c[j] = g.cost_c1[gens[j]];
    q.ub[j] = g.gen_limit[gens[j]];
  }
  q.a_eq = Mat::Ones(1, k);
  q.b_eq = Vec::Constant(1, prob.demand_measured.sum());

  // flow rows only for rated lines; unrated lines are unconstrained
  Vec r = g.shift * prob.demand_measured;  // f = S_g y - r
  std::vector<int> rated;
  for (int e = 0; e < g.m; ++e)
    if (std::isfinite(line_cap(g, e))) rated.push_back(e);
  const int nr = static_cast<int>(rated.size());
  q.g = Mat::Zero(2 * nr, k);
  q.h.resize(2 * nr);
  for (int t = 0; t < nr; ++t) {
    int e = rated[t];
    for (int j = 0; j < k; ++j) {
      q.g(t, j) = g.shift(e, gens[j]);
      q.g(nr + t, j) = -g.shift(e, gens[j]);
    }
    q.h[t] = line_cap(g, e) + r[e];
    q.h[nr + t] = line_cap(g, e) - r[e];
  }

  qp::Options qopt;
  if (start_bias.size() == g.n) {
    qopt.start_bias.resize(k);
    for (int j = 0; j < k; ++j) qopt.start_bias[j] = start_bias[gens[j]];
  }
  qp::Solution qs = qp::solve(q, qopt);
  if (qs.status == qp::Status::infeasible) fail(errc::sced_infeasible, "SCED infeasible");
  if (qs.status != qp::Status::optimal) fail(errc::lp_failed, "SCED QP solve failed");

  ScedSolution sol;
  sol.p_g = Vec::Zero(g.n);
  for (int j = 0; j < k; ++j) sol.p_g[gens[j]] = qs.x[j];
  sol.flows = g.shift * (sol.p_g - prob.demand_measured);
  sol.nu = -qs.eq_duals[0];
  sol.lambda = Vec::Zero(2 * (g.n + g.m));
  for (int j = 0; j < k; ++j) {
    sol.lambda[gens[j]] = qs.lower_duals[j];
    sol.lambda[g.n + gens[j]] = qs.upper_duals[j];
  }
  for (int t = 0; t < nr; ++t) {
    sol.lambda[2 * g.n + rated[t]] = qs.ineq_duals[t];
    sol.lambda[2 * g.n + g.m + rated[t]] = qs.ineq_duals[nr + t];
  }
  // non-generator buses are pinned at zero by coincident bounds; assign the
  // stationarity residual to whichever bound dual keeps the sign nonnegative
  Vec mu = sol.lambda.segment(2 * g.n, g.m) - sol.lambda.segment(2 * g.n + g.m, g.m);
  Vec s = g.shift.transpose() * mu;
  for (int i = 0; i < g.n; ++i) {
    if (g.gen_limit[i] > 0.0) continue;
    double d = g.cost_c1[i] - sol.nu + s[i];
    if (d >= 0.0)
      sol.lambda[i] = d;
    else
      sol.lambda[g.n + i] = -d;
  }

  double internal = g.cost_c0.sum();
  for (int j = 0; j < k; ++j) {
    int i = gens[j];
    internal += g.cost_c2[i] * qs.x[j] * qs.x[j] + g.cost_c1[i] * qs.x[j];
  }
  // c0 of non-generator rows is zero, so summing over all buses is safe
  sol.objective = g.objective_dollars(internal);
  (void)tol;
  return sol;
}

struct KktResiduals {
  double stationarity = 0.0;   // max of gradient condition and balance
  double feasibility = 0.0;    // max inequality violation
  double complementarity = 0.0;
};

inline KktResiduals kkt_residuals(const ScedProblem& prob, const ScedSolution& sol) {
  const GridModel& g = *prob.model;
  KktResiduals out;

  // stationarity: C2 Pg + c1 - 1 nu + A0' lambda = 0, with C2 = diag(2 c2)
  Vec lam_lo = sol.lambda.head(g.n);
  Vec lam_hi = sol.lambda.segment(g.n, g.n);
  Vec lam_fwd = sol.lambda.segment(2 * g.n, g.m);
  Vec lam_rev = sol.lambda.segment(2 * g.n + g.m, g.m);
  Vec grad = 2.0 * g.cost_c2.cwiseProduct(sol.p_g) + g.cost_c1 -
             Vec::Constant(g.n, sol.nu) - lam_lo + lam_hi +
             g.shift.transpose() * (lam_fwd - lam_rev);
  out.stationarity = grad.lpNorm<Eigen::Infinity>();
  out.stationarity =
      std::max(out.stationarity, std::abs(sol.p_g.sum() - prob.demand_measured.sum()));

  Vec flows = g.shift * (sol.p_g - prob.demand_measured);
  for (int i = 0; i < g.n; ++i) {
    double lo_slack = -sol.p_g[i];                      // -Pg <= 0
    double hi_slack = sol.p_g[i] - g.gen_limit[i];      // Pg <= Pg_max
    out.feasibility = std::max({out.feasibility, lo_slack, hi_slack});
    out.complementarity = std::max(out.complementarity, std::abs(lam_lo[i] * lo_slack));
    out.complementarity = std::max(out.complementarity, std::abs(lam_hi[i] * hi_slack));
  }
  for (int e = 0; e < g.m; ++e) {
    double cap = line_cap(g, e);
    if (!std::isfinite(cap)) {
      // unconstrained line: its duals must vanish
      out.complementarity = std::max({out.complementarity, lam_fwd[e], lam_rev[e]});
      continue;
    }
    double fwd = flows[e] - cap;
    double rev = -flows[e] - cap;
    out.feasibility = std::max({out.feasibility, fwd, rev});
    out.complementarity = std::max(out.complementarity, std::abs(lam_fwd[e] * fwd));
    out.complementarity = std::max(out.complementarity, std::abs(lam_rev[e] * rev));
  }
  return out;
}

/// Pre-attack flows P_f(0), solved once per model and cached.
inline const Vec& baseline_flows(const GridModel& g) {
  if (!g.baseline_cache) {
    ScedSolution sol = solve_sced(make_sced_problem(g));
    g.baseline_cache = std::make_shared<const Vec>(sol.flows);
  }
  return *g.baseline_cache;
}

inline double baseline_flow(const GridModel& g, int line, bool* degenerate = nullptr,
                            double eps = 1e-6) {
  if (line < 0 || line >= g.m) fail(errc::unknown_line, "line index out of range");
  double f = baseline_flows(g)[line];
  if (degenerate) *degenerate = std::abs(f) <= eps;
  return f;
}

inline double baseline_flow(const GridModel& g, const LineRef& ref, bool* degenerate = nullptr,
                            double eps = 1e-6) {
  return baseline_flow(g, g.line_index(ref), degenerate, eps);
}

}  // namespace cigrid
