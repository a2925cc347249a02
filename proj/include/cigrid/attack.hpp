#pragma once

// Measurement-attack template against SCED: the inner dispatch is replaced by
// its KKT conditions, complementarity is linearized with big-M gated binaries,
// and the least number of attacked substations is minimized.
//
// Reduction relative to the full stacked form: dispatch variables exist only
// at generator buses; stationarity rows at non-generator buses are always
// satisfiable through their coincident bound duals and are reconstructed
// after the solve; flow rows whose limit is provably unreachable carry no
// complementarity binaries.

#include <optional>
#include <set>

#include "cigrid/milp.hpp"
#include "cigrid/sced.hpp"

namespace cigrid {

enum class SignCase { nonnegative, negative };

struct AttackGoal {
  LineRef line;
  int line_index = -1;
  double tau_tilde = 0.0;
  double baseline = 0.0;  // P_f(0), per-unit
  SignCase sign = SignCase::nonnegative;
};

inline AttackGoal make_attack_goal(const GridModel& g, const ScenarioConfig& cfg,
                                   const LineRef& line, double tau_tilde) {
  if (!(tau_tilde > 0.0) || tau_tilde > cfg.tau_bar)
    fail(errc::bad_tau, "tau_tilde must lie in (0, tau_bar]");
  AttackGoal goal;
  goal.line = line;
  goal.line_index = g.line_index(line);
  goal.tau_tilde = tau_tilde;
  bool degenerate = false;
  goal.baseline = baseline_flow(g, goal.line_index, &degenerate, cfg.tolerances.degeneracy);
  if (degenerate)
    fail(errc::degenerate_goal, "baseline flow on (" + std::to_string(line.from) + "," +
                                    std::to_string(line.to) +
                                    ") is below the degeneracy threshold");
  goal.sign = goal.baseline >= 0.0 ? SignCase::nonnegative : SignCase::negative;
  return goal;
}

struct AttackSolution {
  int kappa = 0;
  Eigen::VectorXi delta;  // length n_s
  Vec a;                  // length n, per-unit
  double tau = 0.0;
  Vec p_g;                // length n
  double nu = 0.0;
  Vec lambda;             // length 2(n+m), full stacking as in sced.hpp
  Eigen::VectorXi omega;  // length 2(n+m); 0 = row treated as binding
  double max_gated_lambda = 0.0;  // largest big-M-gated dual, for M validation
};

enum class SolveOutcome { found, infeasible, undetermined };

struct AttackResult {
  SolveOutcome status = SolveOutcome::infeasible;
  int kappa_star = 0;  // 0 encodes infeasibility by convention
  std::optional<AttackSolution> witness;
  long nodes = 0;
};

/// Assembled model plus the variable layout needed to read a solution back.
struct AttackMilp {
  MilpModel model;
  std::vector<int> gens;   // bus indices with generation
  std::vector<int> rated;  // line indices with finite capacity
  std::vector<int> v_y, v_a, v_delta;
  int v_tau = -1, v_nu = -1;
  std::vector<int> v_f;                    // operator-view flow per rated line
  std::vector<int> v_lam_lo, v_lam_hi;     // per generator
  std::vector<int> v_om_lo, v_om_hi;
  std::vector<int> v_lam_fwd, v_lam_rev;   // per rated line; -1 when pruned
  std::vector<int> v_om_fwd, v_om_rev;
  double a_bar = 0.0;
  double big_m = 0.0;
};

namespace detail {

inline std::string num(int i) { return std::to_string(i); }

}  // namespace detail

inline AttackMilp assemble_attack_milp(
    const GridModel& g, const ScenarioConfig& cfg, const AttackGoal& goal,
    const std::set<int>& protected_subs = {},
    const std::optional<std::set<int>>& fixed_support = std::nullopt,
    std::optional<double> a_bar_override = std::nullopt) {
  if (fixed_support)
    for (int s : *fixed_support)
      if (protected_subs.count(s))
        fail(errc::precondition, "fixed support intersects the protected set");

  AttackMilp am;
  am.a_bar = a_bar_override.value_or(cfg.a_bar);
  am.big_m = cfg.big_m;
  am.gens = g.generator_buses();
  for (int e = 0; e < g.m; ++e)
    if (std::isfinite(line_cap(g, e))) am.rated.push_back(e);
  const int k = static_cast<int>(am.gens.size());
  const int ns = static_cast<int>(g.substation_ids.size());
  const double M = am.big_m;
  MilpModel& mm = am.model;

  for (int j = 0; j < k; ++j)
    am.v_y.push_back(mm.add_variable("y" + detail::num(j), VarKind::continuous, 0.0,
                                     g.gen_limit[am.gens[j]]));
  for (int i = 0; i < g.n; ++i)
    am.v_a.push_back(
        mm.add_variable("a" + detail::num(i), VarKind::continuous, -am.a_bar, am.a_bar));
  for (int s = 0; s < ns; ++s) {
    double lo = 0.0, hi = 1.0;
    if (protected_subs.count(s)) hi = 0.0;
    if (fixed_support) lo = hi = fixed_support->count(s) ? 1.0 : 0.0;
    am.v_delta.push_back(mm.add_variable("d" + detail::num(s), VarKind::binary, lo, hi));
    mm.variables[am.v_delta[s]].branch_priority = 1;  // decide structure first
  }
  am.v_tau = mm.add_variable("tau", VarKind::continuous, goal.tau_tilde, cfg.tau_bar);
  am.v_nu = mm.add_variable("nu", VarKind::continuous, -M, M);

  // attack region: conjunctive rule gates a_i by every covering substation;
  // the disjunctive variant gates by their sum
  for (int i = 0; i < g.n; ++i) {
    const auto& covering = g.substations_of[i];
    if (covering.empty()) {
      mm.variables[am.v_a[i]].lb = mm.variables[am.v_a[i]].ub = 0.0;
      continue;
    }
    if (cfg.overlap_rule == OverlapRule::all_covering) {
      for (int s : covering) {
        mm.add_constraint("reg_p" + detail::num(i) + "_" + detail::num(s),
                          {{am.v_a[i], 1.0}, {am.v_delta[s], -am.a_bar}}, Relation::le, 0.0);
        mm.add_constraint("reg_m" + detail::num(i) + "_" + detail::num(s),
                          {{am.v_a[i], -1.0}, {am.v_delta[s], -am.a_bar}}, Relation::le, 0.0);
      }
    } else {
      std::vector<std::pair<int, double>> up{{am.v_a[i], 1.0}}, dn{{am.v_a[i], -1.0}};
      for (int s : covering) {
        up.emplace_back(am.v_delta[s], -am.a_bar);
        dn.emplace_back(am.v_delta[s], -am.a_bar);
      }
      mm.add_constraint("reg_p" + detail::num(i), up, Relation::le, 0.0);
      mm.add_constraint("reg_m" + detail::num(i), dn, Relation::le, 0.0);
    }
  }

  // resource bound
  {
    int cap = cfg.kappa_max >= 0 ? cfg.kappa_max : ns;
    std::vector<std::pair<int, double>> row;
    for (int v : am.v_delta) row.emplace_back(v, 1.0);
    mm.add_constraint("resource", row, Relation::le, static_cast<double>(cap));
  }

  // balance over the measured demand: sum y - sum a = sum Pd
  {
    std::vector<std::pair<int, double>> row;
    for (int v : am.v_y) row.emplace_back(v, 1.0);
    for (int v : am.v_a) row.emplace_back(v, -1.0);
    mm.add_constraint("balance", row, Relation::eq, g.demand.sum());
  }

  // operator-view flows on rated lines: f_e = F_e (Pg - Pd - a)
  for (std::size_t t = 0; t < am.rated.size(); ++t) {
    int e = am.rated[t];
    double cap = line_cap(g, e);
    am.v_f.push_back(mm.add_variable("f" + detail::num(e), VarKind::continuous, -cap, cap));
    std::vector<std::pair<int, double>> row{{am.v_f[t], 1.0}};
    for (int j = 0; j < k; ++j)
      if (g.shift(e, am.gens[j]) != 0.0) row.emplace_back(am.v_y[j], -g.shift(e, am.gens[j]));
    for (int i = 0; i < g.n; ++i)
      if (g.shift(e, i) != 0.0) row.emplace_back(am.v_a[i], g.shift(e, i));
    mm.add_constraint("flow" + detail::num(e), row, Relation::eq, -g.shift.row(e).dot(g.demand));
  }

  // a rated line whose limit is unreachable under any admissible injection
  // needs no duals: its lambdas stay zero
  std::vector<char> can_bind(am.rated.size(), 1);
  for (std::size_t t = 0; t < am.rated.size(); ++t) {
    int e = am.rated[t];
    double reach = 0.0;
    for (int j = 0; j < k; ++j) reach += std::abs(g.shift(e, am.gens[j])) * g.gen_limit[am.gens[j]];
    for (int i = 0; i < g.n; ++i) reach += std::abs(g.shift(e, i)) * (g.demand[i] + am.a_bar);
    if (reach < line_cap(g, e) - 1e-9) can_bind[t] = 0;
  }

  // dual variables and big-M complementarity
  for (int j = 0; j < k; ++j) {
    am.v_lam_lo.push_back(mm.add_variable("llo" + detail::num(j), VarKind::continuous, 0.0, M));
    am.v_lam_hi.push_back(mm.add_variable("lhi" + detail::num(j), VarKind::continuous, 0.0, M));
    am.v_om_lo.push_back(mm.add_variable("wlo" + detail::num(j), VarKind::binary, 0.0, 1.0));
    am.v_om_hi.push_back(mm.add_variable("whi" + detail::num(j), VarKind::binary, 0.0, 1.0));
    mm.add_constraint("cl_lo" + detail::num(j), {{am.v_lam_lo[j], 1.0}, {am.v_om_lo[j], M}},
                      Relation::le, M);
    mm.add_constraint("cs_lo" + detail::num(j), {{am.v_y[j], 1.0}, {am.v_om_lo[j], -M}},
                      Relation::le, 0.0);
    mm.add_constraint("cl_hi" + detail::num(j), {{am.v_lam_hi[j], 1.0}, {am.v_om_hi[j], M}},
                      Relation::le, M);
    mm.add_constraint("cs_hi" + detail::num(j), {{am.v_y[j], -1.0}, {am.v_om_hi[j], -M}},
                      Relation::le, -g.gen_limit[am.gens[j]]);
  }
  am.v_lam_fwd.assign(am.rated.size(), -1);
  am.v_lam_rev.assign(am.rated.size(), -1);
  am.v_om_fwd.assign(am.rated.size(), -1);
  am.v_om_rev.assign(am.rated.size(), -1);
  for (std::size_t t = 0; t < am.rated.size(); ++t) {
    if (!can_bind[t]) continue;
    int e = am.rated[t];
    double cap = line_cap(g, e);
    am.v_lam_fwd[t] = mm.add_variable("lfw" + detail::num(e), VarKind::continuous, 0.0, M);
    am.v_lam_rev[t] = mm.add_variable("lrv" + detail::num(e), VarKind::continuous, 0.0, M);
    am.v_om_fwd[t] = mm.add_variable("wfw" + detail::num(e), VarKind::binary, 0.0, 1.0);
    am.v_om_rev[t] = mm.add_variable("wrv" + detail::num(e), VarKind::binary, 0.0, 1.0);
    mm.add_constraint("cl_fw" + detail::num(e), {{am.v_lam_fwd[t], 1.0}, {am.v_om_fwd[t], M}},
                      Relation::le, M);
    mm.add_constraint("cs_fw" + detail::num(e), {{am.v_f[t], -1.0}, {am.v_om_fwd[t], -M}},
                      Relation::le, -cap);
    mm.add_constraint("cl_rv" + detail::num(e), {{am.v_lam_rev[t], 1.0}, {am.v_om_rev[t], M}},
                      Relation::le, M);
    mm.add_constraint("cs_rv" + detail::num(e), {{am.v_f[t], 1.0}, {am.v_om_rev[t], -M}},
                      Relation::le, -cap);
  }

  // stationarity at generator buses: 2 c2 y - nu - lam_lo + lam_hi + F'(lam+ - lam-) = -c1
  for (int j = 0; j < k; ++j) {
    int i = am.gens[j];
    std::vector<std::pair<int, double>> row{{am.v_y[j], 2.0 * g.cost_c2[i]},
                                            {am.v_nu, -1.0},
                                            {am.v_lam_lo[j], -1.0},
                                            {am.v_lam_hi[j], 1.0}};
    for (std::size_t t = 0; t < am.rated.size(); ++t) {
      if (am.v_lam_fwd[t] < 0) continue;
      double c = g.shift(am.rated[t], i);
      if (c == 0.0) continue;
      row.emplace_back(am.v_lam_fwd[t], c);
      row.emplace_back(am.v_lam_rev[t], -c);
    }
    mm.add_constraint("stat" + detail::num(j), row, Relation::eq, -g.cost_c1[i]);
  }

  // goal on the physical flow F_e (Pg - Pd): branch on the baseline sign
  {
    int e = goal.line_index;
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < k; ++j)
      if (g.shift(e, am.gens[j]) != 0.0) row.emplace_back(am.v_y[j], g.shift(e, am.gens[j]));
    row.emplace_back(am.v_tau, -goal.baseline);
    double rhs = goal.baseline + g.shift.row(e).dot(g.demand);
    mm.add_constraint("goal", row,
                      goal.sign == SignCase::nonnegative ? Relation::ge : Relation::le, rhs);
  }

  std::vector<std::pair<int, double>> obj;
  for (int v : am.v_delta) obj.emplace_back(v, 1.0);
  mm.set_objective(false, obj);
  return am;
}

/// Read a MILP point back into the full-length attack solution, including the
/// reconstructed bound duals at non-generator buses.
inline AttackSolution extract_attack_solution(const GridModel& g, const AttackMilp& am,
                                              const MilpSolution& ms) {
  AttackSolution out;
  const auto& x = ms.values;
  const int ns = static_cast<int>(am.v_delta.size());
  out.delta.resize(ns);
  out.kappa = 0;
  for (int s = 0; s < ns; ++s) {
    out.delta[s] = x[am.v_delta[s]] > 0.5 ? 1 : 0;
    out.kappa += out.delta[s];
  }
  out.a.resize(g.n);
  for (int i = 0; i < g.n; ++i) out.a[i] = x[am.v_a[i]];
  out.tau = x[am.v_tau];
  out.nu = x[am.v_nu];
  out.p_g = Vec::Zero(g.n);
  for (std::size_t j = 0; j < am.gens.size(); ++j) out.p_g[am.gens[j]] = x[am.v_y[j]];

  out.lambda = Vec::Zero(2 * (g.n + g.m));
  out.omega = Eigen::VectorXi::Ones(2 * (g.n + g.m));
  for (std::size_t j = 0; j < am.gens.size(); ++j) {
    int i = am.gens[j];
    out.lambda[i] = x[am.v_lam_lo[j]];
    out.lambda[g.n + i] = x[am.v_lam_hi[j]];
    out.omega[i] = x[am.v_om_lo[j]] > 0.5 ? 1 : 0;
    out.omega[g.n + i] = x[am.v_om_hi[j]] > 0.5 ? 1 : 0;
    out.max_gated_lambda = std::max({out.max_gated_lambda, out.lambda[i], out.lambda[g.n + i]});
  }
  for (std::size_t t = 0; t < am.rated.size(); ++t) {
    if (am.v_lam_fwd[t] < 0) continue;
    int e = am.rated[t];
    out.lambda[2 * g.n + e] = x[am.v_lam_fwd[t]];
    out.lambda[2 * g.n + g.m + e] = x[am.v_lam_rev[t]];
    out.omega[2 * g.n + e] = x[am.v_om_fwd[t]] > 0.5 ? 1 : 0;
    out.omega[2 * g.n + g.m + e] = x[am.v_om_rev[t]] > 0.5 ? 1 : 0;
    out.max_gated_lambda = std::max(
        {out.max_gated_lambda, out.lambda[2 * g.n + e], out.lambda[2 * g.n + g.m + e]});
  }
  // non-generator buses: both bounds coincide at zero, so the stationarity
  // residual lands on whichever dual keeps the sign nonnegative
  Vec mu = out.lambda.segment(2 * g.n, g.m) - out.lambda.segment(2 * g.n + g.m, g.m);
  Vec s = g.shift.transpose() * mu;
  for (int i = 0; i < g.n; ++i) {
    if (g.gen_limit[i] > 0.0) continue;
    double d = g.cost_c1[i] - out.nu + s[i];
    if (d >= 0.0)
      out.lambda[i] = d;
    else
      out.lambda[g.n + i] = -d;
    out.omega[i] = out.omega[g.n + i] = 0;  // both rows binding at zero
  }
  return out;
}

namespace detail {

// Probe a candidate attack vector by solving the forward dispatch exactly.
// When the replayed dispatch meets the goal, the exact KKT point packs into a
// complete MILP assignment, giving the branch-and-bound an early incumbent.
inline bool pack_attack_candidate(const GridModel& g, const AttackMilp& am,
                                  const AttackGoal& goal, const Vec& a_try,
                                  const std::vector<char>& delta_try, Eigen::VectorXd& out) {
  ScedSolution fwd;
  try {
    fwd = solve_sced({&g, g.demand + a_try});
  } catch (const error&) {
    return false;
  }
  double physical = g.shift.row(goal.line_index).dot(fwd.p_g - g.demand);
  double tau = physical / goal.baseline - 1.0;  // sign-correct for either branch
  if (tau < goal.tau_tilde) return false;
  double tau_bar = am.model.variables[am.v_tau].ub;
  tau = std::min(tau, tau_bar);
  // gated duals must clear the big-M with margin
  double max_lam = 0.0;
  for (std::size_t j = 0; j < am.gens.size(); ++j)
    max_lam = std::max({max_lam, fwd.lambda[am.gens[j]], fwd.lambda[g.n + am.gens[j]]});
  for (std::size_t t = 0; t < am.rated.size(); ++t)
    max_lam = std::max({max_lam, fwd.lambda[2 * g.n + am.rated[t]],
                        fwd.lambda[2 * g.n + g.m + am.rated[t]]});
  if (max_lam > 0.99 * am.big_m) return false;

  out = Eigen::VectorXd::Zero(static_cast<int>(am.model.variables.size()));
  for (std::size_t j = 0; j < am.gens.size(); ++j) out[am.v_y[j]] = fwd.p_g[am.gens[j]];
  for (int i = 0; i < g.n; ++i) out[am.v_a[i]] = a_try[i];
  for (std::size_t s = 0; s < delta_try.size(); ++s) out[am.v_delta[s]] = delta_try[s] ? 1.0 : 0.0;
  out[am.v_tau] = tau;
  out[am.v_nu] = fwd.nu;
  const double eps = 1e-7;
  for (std::size_t t = 0; t < am.rated.size(); ++t) {
    int e = am.rated[t];
    double f = fwd.flows[e];
    out[am.v_f[t]] = f;
    if (am.v_lam_fwd[t] < 0) continue;
    double lam_f = fwd.lambda[2 * g.n + e], lam_r = fwd.lambda[2 * g.n + g.m + e];
    double cap = line_cap(g, e);
    out[am.v_lam_fwd[t]] = lam_f;
    out[am.v_lam_rev[t]] = lam_r;
    out[am.v_om_fwd[t]] = (lam_f <= eps && cap - f > eps) ? 1.0 : 0.0;
    out[am.v_om_rev[t]] = (lam_r <= eps && cap + f > eps) ? 1.0 : 0.0;
  }
  for (std::size_t j = 0; j < am.gens.size(); ++j) {
    int i = am.gens[j];
    double y = fwd.p_g[i], ub = g.gen_limit[i];
    double lam_lo = fwd.lambda[i], lam_hi = fwd.lambda[g.n + i];
    out[am.v_lam_lo[j]] = lam_lo;
    out[am.v_lam_hi[j]] = lam_hi;
    out[am.v_om_lo[j]] = (lam_lo <= eps && y > eps) ? 1.0 : 0.0;
    out[am.v_om_hi[j]] = (lam_hi <= eps && ub - y > eps) ? 1.0 : 0.0;
  }
  return true;
}

// Memoizing replay probe over distinct candidate supports seen in relaxations.
inline std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&)> make_replay_heuristic(
    const GridModel& g, const ScenarioConfig& cfg, const AttackGoal& goal,
    const std::shared_ptr<const AttackMilp>& am, const std::set<int>& protected_subs) {
  auto tried = std::make_shared<std::set<std::vector<char>>>();
  return [&g, cfg, goal, am, protected_subs, tried](const Eigen::VectorXd& relax,
                                                    Eigen::VectorXd& cand) {
    const int ns = static_cast<int>(am->v_delta.size());
    Vec a_try = Vec::Zero(g.n);
    std::vector<char> support(ns, 0);
    for (int i = 0; i < g.n; ++i) {
      double a = relax[am->v_a[i]];
      if (std::abs(a) <= 1e-7) continue;
      a_try[i] = a;
      if (cfg.overlap_rule == OverlapRule::all_covering) {
        for (int s : g.substations_of[i]) support[s] = 1;
      } else {
        // one covering substation suffices; prefer one already selected
        int pick = -1;
        for (int s : g.substations_of[i]) {
          if (support[s]) { pick = s; break; }
          if (pick < 0 || relax[am->v_delta[s]] > relax[am->v_delta[pick]]) pick = s;
        }
        if (pick >= 0) support[pick] = 1;
      }
    }
    bool any = false;
    for (int s = 0; s < ns; ++s) {
      const auto& dv = am->model.variables[am->v_delta[s]];
      if (support[s] && (dv.ub < 0.5 || protected_subs.count(s)))
        return false;               // touches a protected / excluded region
      if (dv.lb > 0.5) support[s] = 1;  // delta fixed on (fixed-support probes)
      any = any || support[s];
    }
    if (!any) return false;
    if (!tried->insert(support).second) return false;  // support already probed
    return pack_attack_candidate(g, *am, goal, a_try, support, cand);
  };
}

// Relaxations abuse fractional gates to keep a dual and its slack positive at
// once; branching on the most-abused pair removes that freedom fastest.
inline std::function<int(const Eigen::VectorXd&)> make_abuse_branch_hint(
    const GridModel& g, const std::shared_ptr<const AttackMilp>& am) {
  return [&g, am](const Eigen::VectorXd& x) {
    int best = -1;
    double best_score = 1e-9;
    auto consider = [&](int om_var, double lam, double slack) {
      double frac = std::abs(x[om_var] - std::round(x[om_var]));
      if (frac <= 1e-6) return;
      double score = lam * std::max(slack, 0.0);
      if (score > best_score) {
        best_score = score;
        best = om_var;
      }
    };
    for (std::size_t j = 0; j < am->gens.size(); ++j) {
      double y = x[am->v_y[j]];
      consider(am->v_om_lo[j], x[am->v_lam_lo[j]], y);
      consider(am->v_om_hi[j], x[am->v_lam_hi[j]], g.gen_limit[am->gens[j]] - y);
    }
    for (std::size_t t = 0; t < am->rated.size(); ++t) {
      if (am->v_om_fwd[t] < 0) continue;
      double cap = line_cap(g, am->rated[t]);
      double f = x[am->v_f[t]];
      consider(am->v_om_fwd[t], x[am->v_lam_fwd[t]], cap - f);
      consider(am->v_om_rev[t], x[am->v_lam_rev[t]], cap + f);
    }
    return best;
  };
}

}  // namespace detail

inline AttackResult security_index(const GridModel& g, const ScenarioConfig& cfg,
                                   const AttackGoal& goal,
                                   const std::set<int>& protected_subs = {},
                                   const MilpLimits& limits = {}) {
  auto am = std::make_shared<AttackMilp>(assemble_attack_milp(g, cfg, goal, protected_subs));
  MilpOptions opt;
  opt.incumbent_heuristic = detail::make_replay_heuristic(g, cfg, goal, am, protected_subs);
  opt.branch_hint = detail::make_abuse_branch_hint(g, am);
  MilpSolution ms = solve_milp(am->model, limits, opt);
  AttackResult out;
  out.nodes = ms.node_count;
  switch (ms.status) {
    case MilpStatus::optimal:
      out.status = SolveOutcome::found;
      out.witness = extract_attack_solution(g, *am, ms);
      out.kappa_star = out.witness->kappa;
      break;
    case MilpStatus::infeasible:
      out.status = SolveOutcome::infeasible;
      out.kappa_star = 0;  // table convention for an ineffective attack
      break;
    default:
      out.status = SolveOutcome::undetermined;
      out.kappa_star = 0;
      break;
  }
  return out;
}

inline AttackResult support_feasible(const GridModel& g, const ScenarioConfig& cfg,
                                     const AttackGoal& goal, const std::set<int>& support,
                                     const MilpLimits& limits = {}) {
  for (int s : support)
    if (s < 0 || s >= static_cast<int>(g.substation_ids.size()))
      fail(errc::precondition, "support contains an unknown substation");
  auto am = std::make_shared<AttackMilp>(assemble_attack_milp(g, cfg, goal, {}, support));
  MilpOptions opt;
  opt.incumbent_heuristic = detail::make_replay_heuristic(g, cfg, goal, am, {});
  opt.branch_hint = detail::make_abuse_branch_hint(g, am);
  MilpSolution ms = solve_milp(am->model, limits, opt);
  AttackResult out;
  out.nodes = ms.node_count;
  if (ms.status == MilpStatus::optimal) {
    out.status = SolveOutcome::found;
    out.witness = extract_attack_solution(g, *am, ms);
    out.kappa_star = out.witness->kappa;
  } else if (ms.status == MilpStatus::infeasible) {
    out.status = SolveOutcome::infeasible;
  } else {
    out.status = SolveOutcome::undetermined;
  }
  return out;
}

struct ReplayResult {
  double achieved_tau = 0.0;
  bool reached = false;
  bool sced_infeasible = false;
  // distance between the MILP's predicted physical goal-line flow and the
  // replayed one; a large value flags a dual-degeneracy incident
  double flow_mismatch = 0.0;
};

inline ReplayResult replay_attack(const GridModel& g, const ScenarioConfig& cfg,
                                  const AttackGoal& goal, const AttackSolution& attack,
                                  double eps = 1e-6) {
  if (attack.a.size() != g.n) fail(errc::bad_attack_vector, "attack vector length mismatch");
  for (int i = 0; i < g.n; ++i) {
    if (std::abs(attack.a[i]) > cfg.a_bar + eps)
      fail(errc::bad_attack_vector, "attack magnitude exceeds a_bar at bus " + std::to_string(i));
    if (std::abs(attack.a[i]) > eps) {
      const auto& covering = g.substations_of[i];
      bool allowed;
      if (cfg.overlap_rule == OverlapRule::all_covering) {
        allowed = !covering.empty();
        for (int s : covering) allowed = allowed && attack.delta[s] == 1;
      } else {
        allowed = false;
        for (int s : covering) allowed = allowed || attack.delta[s] == 1;
      }
      if (!allowed)
        fail(errc::bad_attack_vector,
             "attack touches bus " + std::to_string(i) + " outside the attacked region");
    }
  }

  ReplayResult out;
  ScedSolution fwd;
  try {
    fwd = solve_sced(make_sced_problem(g, attack.a));
  } catch (const error& e) {
    if (e.code() == errc::sced_infeasible) {
      out.sced_infeasible = true;
      return out;
    }
    throw;
  }
  Vec physical = g.shift * (fwd.p_g - g.demand);
  double f = physical[goal.line_index];
  out.achieved_tau = std::abs(f) / std::abs(goal.baseline) - 1.0;
  out.reached = out.achieved_tau >= goal.tau_tilde - eps;
  double predicted = g.shift.row(goal.line_index).dot(attack.p_g - g.demand);
  out.flow_mismatch = std::abs(f - predicted);
  return out;
}

struct SweepCell {
  double tau_tilde = 0.0;
  double a_bar = 0.0;
  SolveOutcome status = SolveOutcome::infeasible;
  int kappa_star = 0;
};

struct SweepResult {
  std::vector<double> tau_grid, a_bar_grid;
  std::vector<std::vector<SweepCell>> table;  // [a_bar][tau]
  // per a_bar row: nondominated (tau, kappa) pairs, largest tau per kappa
  std::vector<std::vector<std::pair<double, int>>> frontier;
};

inline SweepResult kappa_sweep(const GridModel& g, const ScenarioConfig& cfg,
                               const LineRef& goal_line, const std::vector<double>& tau_grid,
                               const std::vector<double>& a_bar_grid,
                               const MilpLimits& limits = {}) {
  if (tau_grid.empty() || a_bar_grid.empty()) fail(errc::precondition, "empty sweep grid");
  SweepResult out;
  out.tau_grid = tau_grid;
  out.a_bar_grid = a_bar_grid;
  for (double a_bar : a_bar_grid) {
    std::vector<SweepCell> row;
    for (double tau : tau_grid) {
      SweepCell cell;
      cell.tau_tilde = tau;
      cell.a_bar = a_bar;
      AttackGoal goal = make_attack_goal(g, cfg, goal_line, tau);
      auto am = std::make_shared<AttackMilp>(
          assemble_attack_milp(g, cfg, goal, {}, std::nullopt, a_bar));
      MilpOptions opt;
      opt.incumbent_heuristic = detail::make_replay_heuristic(g, cfg, goal, am, {});
      opt.branch_hint = detail::make_abuse_branch_hint(g, am);
      MilpSolution ms = solve_milp(am->model, limits, opt);
      if (ms.status == MilpStatus::optimal) {
        cell.status = SolveOutcome::found;
        cell.kappa_star = static_cast<int>(std::lround(ms.objective_value));
      } else if (ms.status == MilpStatus::infeasible) {
        cell.status = SolveOutcome::infeasible;
      } else {
        cell.status = SolveOutcome::undetermined;
      }
      row.push_back(cell);
    }
    out.table.push_back(std::move(row));
  }
  for (const auto& row : out.table) {
    // keep, per kappa level, the largest tau reaching it
    std::vector<std::pair<double, int>> reduced;
    for (const auto& cell : row) {
      if (cell.status != SolveOutcome::found) continue;
      if (!reduced.empty() && reduced.back().second == cell.kappa_star)
        reduced.back().first = cell.tau_tilde;
      else
        reduced.emplace_back(cell.tau_tilde, cell.kappa_star);
    }
    out.frontier.push_back(std::move(reduced));
  }
  return out;
}

}  // namespace cigrid
