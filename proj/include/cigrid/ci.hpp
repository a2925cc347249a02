#pragma once

// Correlation-index set algebra on top of the attack template: exhaustive
// enumeration of minimal attacker supports, multi-goal constructions, defense
// strategies against them, and the substation-protection effectiveness metric.

#include <atomic>
#include <map>
#include <sstream>
#include <thread>

#include "cigrid/attack.hpp"

namespace cigrid {

/// One minimal attacker support together with its replay-validated witness.
struct CorrelationIndex {
  std::set<int> substations;
  AttackSolution witness;
};

struct CiCollection {
  AttackGoal goal;
  int kappa_star = 0;  // 0: no support of any size works
  std::vector<CorrelationIndex> members;  // lexicographic by substation set
  bool exhaustive = true;
  std::vector<std::set<int>> untested;  // supports skipped on solver limits

  bool contains(const std::set<int>& s) const {
    for (const auto& m : members)
      if (m.substations == s) return true;
    return false;
  }
};

namespace detail {

/// All size-k subsets of `pool` in lexicographic order.
inline std::vector<std::set<int>> k_subsets(const std::vector<int>& pool, int k) {
  std::vector<std::set<int>> out;
  if (k < 0 || k > static_cast<int>(pool.size())) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  const int n = static_cast<int>(pool.size());
  while (true) {
    std::set<int> s;
    for (int i : idx) s.insert(pool[i]);
    out.push_back(std::move(s));
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

/// Run `body(i)` for i in [0, count) across `jobs` threads; results must be
/// written to pre-sized slots so the merge order is independent of timing.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline CiCollection enumerate_cis(const GridModel& g, const ScenarioConfig& cfg,
                                  const AttackGoal& goal, const std::set<int>& protected_subs = {},
                                  const MilpLimits& limits = {}, int jobs = 1) {
  CiCollection out;
  out.goal = goal;
  AttackResult root = security_index(g, cfg, goal, protected_subs, limits);
  if (root.status == SolveOutcome::undetermined) {
    out.exhaustive = false;
    return out;
  }
  if (root.status == SolveOutcome::infeasible) return out;  // kappa 0, empty
  out.kappa_star = root.kappa_star;

  std::vector<int> pool;
  for (int s = 0; s < static_cast<int>(g.substation_ids.size()); ++s)
    if (!protected_subs.count(s)) pool.push_back(s);
  std::vector<std::set<int>> candidates = detail::k_subsets(pool, out.kappa_star);

  baseline_flows(g);  // warm the shared cache before any worker threads start
  std::vector<AttackResult> results(candidates.size());
  detail::parallel_for(static_cast<int>(candidates.size()), jobs, [&](int i) {
    results[i] = support_feasible(g, cfg, goal, candidates[i], limits);
  });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    switch (results[i].status) {
      case SolveOutcome::found:
        out.members.push_back({candidates[i], *results[i].witness});
        break;
      case SolveOutcome::undetermined:
        out.untested.push_back(candidates[i]);
        out.exhaustive = false;
        break;
      case SolveOutcome::infeasible:
        break;
    }
  }
  return out;
}

enum class Effectiveness { effective, ineffective, undetermined };

/// Membership test for the effective-attack family: can corrupting exactly
/// the given substations reach the goal? Witnesses are replay-validated.
inline Effectiveness is_effective(const GridModel& g, const ScenarioConfig& cfg,
                                  const AttackGoal& goal, const std::set<int>& support,
                                  const MilpLimits& limits = {}) {
  AttackResult r = support_feasible(g, cfg, goal, support, limits);
  if (r.status == SolveOutcome::undetermined) return Effectiveness::undetermined;
  if (r.status == SolveOutcome::infeasible) return Effectiveness::ineffective;
  ReplayResult rep = replay_attack(g, cfg, goal, *r.witness);
  return rep.reached ? Effectiveness::effective : Effectiveness::undetermined;
}

enum class MultiGoalMode { union_of_cis, exact };

struct MultiGoalResult {
  std::set<int> substations;
  int kappa = 0;
  bool lower_bound_ok = false;  // |S| >= max individual kappa*
  // union mode: goals (by index) for which the union failed its replay check;
  // expected empty, surfaced rather than hidden when it happens
  std::vector<int> replay_failures;
};

namespace detail {

/// One model carrying every goal's target row, each with its own overload
/// variable; everything else in the template is goal-independent.
inline AttackMilp assemble_multi_goal_milp(const GridModel& g, const ScenarioConfig& cfg,
                                           const std::vector<AttackGoal>& goals,
                                           const std::set<int>& protected_subs) {
  AttackMilp am = assemble_attack_milp(g, cfg, goals[0], protected_subs);
  for (std::size_t j = 1; j < goals.size(); ++j) {
    const AttackGoal& goal = goals[j];
    int vt = am.model.add_variable("tau" + num(static_cast<int>(j)), VarKind::continuous,
                                   goal.tau_tilde, cfg.tau_bar);
    int e = goal.line_index;
    std::vector<std::pair<int, double>> row;
    for (std::size_t t = 0; t < am.gens.size(); ++t)
      if (g.shift(e, am.gens[t]) != 0.0) row.emplace_back(am.v_y[t], g.shift(e, am.gens[t]));
    row.emplace_back(vt, -goal.baseline);
    double rhs = goal.baseline + g.shift.row(e).dot(g.demand);
    am.model.add_constraint("goal" + num(static_cast<int>(j)), row,
                            goal.sign == SignCase::nonnegative ? Relation::ge : Relation::le,
                            rhs);
  }
  return am;
}

}  // namespace detail

inline MultiGoalResult multi_goal_ci(const GridModel& g, const ScenarioConfig& cfg,
                                     const std::vector<AttackGoal>& goals, MultiGoalMode mode,
                                     const MilpLimits& limits = {}, int jobs = 1) {
  if (goals.empty()) fail(errc::precondition, "multi-goal construction needs at least one goal");
  MultiGoalResult out;
  int max_kappa = 0;

  if (mode == MultiGoalMode::union_of_cis) {
    for (std::size_t j = 0; j < goals.size(); ++j) {
      CiCollection cis = enumerate_cis(g, cfg, goals[j], {}, limits, jobs);
      if (cis.kappa_star == 0 || cis.members.empty())
        fail(errc::precondition,
             "goal " + std::to_string(j) + " is individually infeasible");
      // deterministic pick: the lexicographically smallest of this goal's CIs
      out.substations.insert(cis.members.front().substations.begin(),
                             cis.members.front().substations.end());
      max_kappa = std::max(max_kappa, cis.kappa_star);
    }
    out.kappa = static_cast<int>(out.substations.size());
    for (std::size_t j = 0; j < goals.size(); ++j)
      if (is_effective(g, cfg, goals[j], out.substations, limits) != Effectiveness::effective)
        out.replay_failures.push_back(static_cast<int>(j));
  } else {
    for (const auto& goal : goals) {
      AttackResult r = security_index(g, cfg, goal, {}, limits);
      if (r.status != SolveOutcome::found)
        fail(errc::precondition, "a goal is individually infeasible or undetermined");
      max_kappa = std::max(max_kappa, r.kappa_star);
    }
    AttackMilp am = detail::assemble_multi_goal_milp(g, cfg, goals, {});
    MilpSolution ms = solve_milp(am.model, limits);
    if (ms.status == MilpStatus::infeasible)
      fail(errc::jointly_infeasible, "no attack satisfies every goal at once");
    if (ms.status != MilpStatus::optimal)
      fail(errc::undetermined, "multi-goal solve hit the solver limit");
    AttackSolution w = extract_attack_solution(g, am, ms);
    for (int s = 0; s < w.delta.size(); ++s)
      if (w.delta[s]) out.substations.insert(s);
    out.kappa = w.kappa;
  }
  out.lower_bound_ok = out.kappa >= max_kappa;
  return out;
}

/// Smallest subset of an observed effective attack whose protection makes the
/// remaining substations ineffective; ties broken lexicographically.
inline std::set<int> defense_best_for_line(const GridModel& g, const ScenarioConfig& cfg,
                                           const AttackGoal& goal, const std::set<int>& observed,
                                           const MilpLimits& limits = {}) {
  if (is_effective(g, cfg, goal, observed, limits) != Effectiveness::effective)
    fail(errc::precondition, "observed attack set is not effective");
  std::vector<int> pool(observed.begin(), observed.end());
  for (int size = 1; size <= static_cast<int>(pool.size()); ++size) {
    for (const auto& d : detail::k_subsets(pool, size)) {
      std::set<int> remainder = observed;
      for (int s : d) remainder.erase(s);
      if (is_effective(g, cfg, goal, remainder, limits) == Effectiveness::ineffective) return d;
    }
  }
  fail(errc::precondition, "no protection subset disables the observed attack");
}

/// Smallest protection set that strictly raises the security index (or makes
/// the goal infeasible outright); searched by increasing size, lexicographic.
inline std::set<int> defense_against_cis(const GridModel& g, const ScenarioConfig& cfg,
                                         const AttackGoal& goal, const MilpLimits& limits = {}) {
  AttackResult base = security_index(g, cfg, goal, {}, limits);
  if (base.status != SolveOutcome::found)
    fail(errc::precondition, "goal must be feasible before a defense can raise its index");
  std::vector<int> pool;
  for (int s = 0; s < static_cast<int>(g.substation_ids.size()); ++s) pool.push_back(s);
  for (int size = 1; size <= static_cast<int>(pool.size()); ++size) {
    for (const auto& d : detail::k_subsets(pool, size)) {
      AttackResult r = security_index(g, cfg, goal, d, limits);
      if (r.status == SolveOutcome::infeasible ||
          (r.status == SolveOutcome::found && r.kappa_star > base.kappa_star))
        return d;
    }
  }
  fail(errc::precondition, "no protection set raises the security index");
}

enum class ProtectionEffect { unique_raised, common_raised, pruned, eliminated };

inline const char* protection_effect_name(ProtectionEffect c) {
  switch (c) {
    case ProtectionEffect::unique_raised: return "unique-raised";
    case ProtectionEffect::common_raised: return "common-raised";
    case ProtectionEffect::pruned: return "pruned";
    case ProtectionEffect::eliminated: return "eliminated";
  }
  return "?";
}

/// Per-line security indices before any protection, shared across the
/// per-substation effectiveness reports.
struct DefenseBaseLine {
  int line_index = -1;
  LineRef line;
  bool degenerate = false;
  SolveOutcome status = SolveOutcome::infeasible;
  int kappa = 0;
  std::set<int> witness_support;
};

struct DefenseBase {
  double tau_tilde = 0.0;
  std::vector<DefenseBaseLine> lines;
};

inline DefenseBase compute_defense_base(const GridModel& g, const ScenarioConfig& cfg,
                                        double tau_tilde, const MilpLimits& limits = {},
                                        int jobs = 1) {
  DefenseBase base;
  base.tau_tilde = tau_tilde;
  base.lines.resize(g.m);
  baseline_flows(g);
  detail::parallel_for(g.m, jobs, [&](int e) {
    DefenseBaseLine& row = base.lines[e];
    row.line_index = e;
    row.line = LineRef{g.lines[e].from_id, g.lines[e].to_id};
    bool degenerate = false;
    baseline_flow(g, e, &degenerate, cfg.tolerances.degeneracy);
    row.degenerate = degenerate;
    if (degenerate) return;
    AttackGoal goal = make_attack_goal(g, cfg, row.line, tau_tilde);
    AttackResult r = security_index(g, cfg, goal, {}, limits);
    row.status = r.status;
    if (r.status == SolveOutcome::found) {
      row.kappa = r.kappa_star;
      for (int s = 0; s < r.witness->delta.size(); ++s)
        if (r.witness->delta[s]) row.witness_support.insert(s);
    }
  });
  return base;
}

struct DefenseLineReport {
  LineRef line;
  bool degenerate = false;
  SolveOutcome status = SolveOutcome::infeasible;       // before protection
  SolveOutcome status_beta = SolveOutcome::infeasible;  // after protection
  int kappa = 0;       // 0 encodes infeasible
  int kappa_beta = 0;
};

struct DefenseReport {
  int substation = -1;
  double tau_tilde = 0.0;
  std::vector<DefenseLineReport> lines;
  // averages over non-degenerate, determined lines; infeasible lines count 0
  double r_before = 0.0, r_after = 0.0, delta_r = 0.0;
  // parallel averages over lines feasible before protection only
  double r_before_feasible = 0.0, r_after_feasible = 0.0;
  int excluded_degenerate = 0;
  int excluded_undetermined = 0;
  bool flagged = false;  // any undetermined sub-solve
  // filled by callers that classify a specific goal via classify_protection
  std::optional<ProtectionEffect> protection_effect;
};

inline DefenseReport defense_effectiveness(const GridModel& g, const ScenarioConfig& cfg,
                                           double tau_tilde, int substation,
                                           const DefenseBase* shared_base = nullptr,
                                           const MilpLimits& limits = {}, int jobs = 1) {
  if (substation < 0 || substation >= static_cast<int>(g.substation_ids.size()))
    fail(errc::precondition, "unknown substation");
  DefenseBase local;
  if (!shared_base) {
    local = compute_defense_base(g, cfg, tau_tilde, limits, jobs);
    shared_base = &local;
  }
  if (shared_base->tau_tilde != tau_tilde)
    fail(errc::precondition, "shared base computed for a different flow increase");

  DefenseReport out;
  out.substation = substation;
  out.tau_tilde = tau_tilde;
  out.lines.resize(g.m);

  // a line needs a fresh protected solve only when its unprotected witness
  // uses the substation; otherwise that witness stays optimal under protection
  std::vector<int> resolve;
  for (int e = 0; e < g.m; ++e) {
    const DefenseBaseLine& b = shared_base->lines[e];
    DefenseLineReport& row = out.lines[e];
    row.line = b.line;
    row.degenerate = b.degenerate;
    row.status = b.status;
    row.kappa = b.kappa;
    if (b.degenerate) continue;
    if (b.status == SolveOutcome::found && b.witness_support.count(substation)) {
      resolve.push_back(e);
    } else {
      row.status_beta = b.status;
      row.kappa_beta = b.kappa;
    }
  }
  std::vector<AttackResult> solved(resolve.size());
  detail::parallel_for(static_cast<int>(resolve.size()), jobs, [&](int i) {
    const DefenseBaseLine& b = shared_base->lines[resolve[i]];
    AttackGoal goal = make_attack_goal(g, cfg, b.line, tau_tilde);
    solved[i] = security_index(g, cfg, goal, {substation}, limits);
  });
  for (std::size_t i = 0; i < resolve.size(); ++i) {
    DefenseLineReport& row = out.lines[resolve[i]];
    row.status_beta = solved[i].status;
    row.kappa_beta = solved[i].status == SolveOutcome::found ? solved[i].kappa_star : 0;
  }

  int counted = 0, feasible_counted = 0;
  for (const auto& row : out.lines) {
    if (row.degenerate) {
      ++out.excluded_degenerate;
      continue;
    }
    if (row.status == SolveOutcome::undetermined || row.status_beta == SolveOutcome::undetermined) {
      ++out.excluded_undetermined;
      out.flagged = true;
      continue;
    }
    ++counted;
    // a line whose goal the protection kills outright is harder than any
    // feasible index; score it above the substation count so the average
    // cannot drop (the per-line report keeps the 0 display convention)
    double beta_eff = row.kappa_beta;
    if (row.status == SolveOutcome::found && row.status_beta == SolveOutcome::infeasible)
      beta_eff = static_cast<double>(g.substation_ids.size()) + 1.0;
    out.r_before += row.kappa;
    out.r_after += beta_eff;
    if (row.status == SolveOutcome::found) {
      ++feasible_counted;
      out.r_before_feasible += row.kappa;
      out.r_after_feasible += beta_eff;
    }
  }
  if (counted > 0) {
    out.r_before /= counted;
    out.r_after /= counted;
  }
  if (feasible_counted > 0) {
    out.r_before_feasible /= feasible_counted;
    out.r_after_feasible /= feasible_counted;
  }
  out.delta_r = out.r_after - out.r_before;
  return out;
}

/// Classify the effect of protecting one substation on a goal's CI
/// collection. `after` must be the collection recomputed with the substation
/// protected; both collections must be exhaustive for the dichotomy to hold.
inline ProtectionEffect classify_protection(const CiCollection& before, const CiCollection& after,
                                      int substation) {
  if (before.members.empty())
    fail(errc::precondition, "classification needs a feasible pre-defense collection");
  bool in_some = false, in_all = true;
  for (const auto& m : before.members) {
    bool has = m.substations.count(substation) > 0;
    in_some = in_some || has;
    in_all = in_all && has;
  }
  if (!in_some)
    fail(errc::precondition, "the protected substation belongs to no correlation index");

  if (after.members.empty()) return ProtectionEffect::eliminated;
  if (before.members.size() == 1) {
    if (after.kappa_star > before.kappa_star) return ProtectionEffect::unique_raised;
    fail(errc::precondition, "unique-index hypothesis violated: index did not increase");
  }
  if (in_all) {
    if (after.kappa_star > before.kappa_star) return ProtectionEffect::common_raised;
    fail(errc::precondition, "common-substation hypothesis violated: index did not increase");
  }
  // the substation misses some index: survivors are exactly those that avoid
  // it, a strict subset of the original collection at the same cardinality
  if (after.kappa_star != before.kappa_star)
    fail(errc::precondition, "partial-overlap case must keep the security index");
  for (const auto& m : after.members)
    if (!before.contains(m.substations))
      fail(errc::precondition, "post-defense index not drawn from the original collection");
  if (after.members.size() >= before.members.size())
    fail(errc::precondition, "post-defense collection is not a strict subset");
  return ProtectionEffect::pruned;
}

// ---------------------------------------------------------------------------
// Serialization: one row per CI / per line, tab-separated, plus a readable
// table layout with columns goal, correlation indices, security index.

namespace detail {

inline std::string support_names(const GridModel& g, const std::set<int>& s) {
  std::string out = "{";
  bool first = true;
  for (int k : s) {
    if (!first) out += ",";
    out += g.substation_ids[k];
    first = false;
  }
  return out + "}";
}

inline std::string goal_name(const AttackGoal& goal) {
  std::ostringstream os;
  os << "(" << goal.line.from << "," << goal.line.to << ")@" << goal.tau_tilde;
  return os.str();
}

}  // namespace detail

inline std::string to_tsv(const GridModel& g, const CiCollection& c) {
  std::ostringstream os;
  os << "goal\ttau_tilde\tkappa_star\tsubstations\texhaustive\n";
  if (c.members.empty()) {
    os << "(" << c.goal.line.from << "," << c.goal.line.to << ")\t" << c.goal.tau_tilde << "\t"
       << c.kappa_star << "\t{}\t" << (c.exhaustive ? "yes" : "no") << "\n";
    return os.str();
  }
  for (const auto& m : c.members)
    os << "(" << c.goal.line.from << "," << c.goal.line.to << ")\t" << c.goal.tau_tilde << "\t"
       << c.kappa_star << "\t" << detail::support_names(g, m.substations) << "\t"
       << (c.exhaustive ? "yes" : "no") << "\n";
  return os.str();
}

inline std::string to_text(const GridModel& g, const CiCollection& c) {
  std::ostringstream os;
  os << "goal " << detail::goal_name(c.goal) << "  security index " << c.kappa_star;
  if (!c.exhaustive) os << "  (incomplete)";
  os << "\n";
  if (c.members.empty()) {
    os << "  correlation indices: {}\n";
  } else {
    os << "  correlation indices:";
    for (const auto& m : c.members) os << " " << detail::support_names(g, m.substations);
    os << "\n";
  }
  return os.str();
}

inline std::string to_tsv(const GridModel& g, const DefenseReport& r) {
  std::ostringstream os;
  os << "line\tkappa\tkappa_beta\tnote\n";
  for (const auto& row : r.lines) {
    os << "(" << row.line.from << "," << row.line.to << ")\t" << row.kappa << "\t"
       << row.kappa_beta << "\t";
    if (row.degenerate)
      os << "degenerate";
    else if (row.status == SolveOutcome::undetermined ||
             row.status_beta == SolveOutcome::undetermined)
      os << "undetermined";
    else
      os << "-";
    os << "\n";
  }
  os << "# substation\t" << g.substation_ids[r.substation] << "\n";
  os << "# R\t" << r.r_before << "\n# R_beta\t" << r.r_after << "\n# delta_R\t" << r.delta_r
     << "\n";
  return os.str();
}

inline std::string to_text(const GridModel& g, const DefenseReport& r) {
  std::ostringstream os;
  os << "protecting " << g.substation_ids[r.substation] << " at flow increase " << r.tau_tilde
     << "\n  R = " << r.r_before << "  R_beta = " << r.r_after << "  delta_R = " << r.delta_r
     << "\n  feasible-only: R = " << r.r_before_feasible << "  R_beta = " << r.r_after_feasible
     << "\n  excluded: " << r.excluded_degenerate << " degenerate, " << r.excluded_undetermined
     << " undetermined\n";
  return os.str();
}

}  // namespace cigrid
