// Command-line front end: parse/validate inputs, run dispatch and attack
// analyses, enumerate correlation indices, evaluate defenses, and drive the
// identification knowledge base. Primary output goes to stdout in a chosen
// format; progress and diagnostics go to stderr.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "cigrid/kb.hpp"

using namespace cigrid;
using nlohmann::json;

namespace {

enum class Format { text, tsv, json_fmt };

struct Common {
  std::string case_path, map_path, config_path;
  std::string format = "text";
  int jobs = 1;
  long node_cap = 2'000'000;
  double time_cap = 600.0;
  // overrides applied on top of the config file
  std::optional<double> a_bar, tau_bar, big_m;
  std::optional<int> kappa_max;
  std::optional<std::string> overlap_rule;
  std::vector<std::string> protect;
};

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in.good()) fail(errc::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Format parse_format(const std::string& f) {
  if (f == "text") return Format::text;
  if (f == "tsv") return Format::tsv;
  if (f == "json") return Format::json_fmt;
  fail(errc::bad_config_value, "format must be text, tsv, or json");
}

void add_common(CLI::App* cmd, Common& c, bool need_map = true) {
  cmd->add_option("--case", c.case_path, "case file")->required();
  auto* map = cmd->add_option("--map", c.map_path, "substation map (JSON)");
  if (need_map) map->required();
  cmd->add_option("--config", c.config_path, "scenario config (JSON)");
  cmd->add_option("--format", c.format, "output format: text|tsv|json")
      ->check(CLI::IsMember({"text", "tsv", "json"}));
  cmd->add_option("--jobs", c.jobs, "concurrent sub-solves")->check(CLI::PositiveNumber);
  cmd->add_option("--node-cap", c.node_cap, "branch-and-bound node limit");
  cmd->add_option("--time-cap", c.time_cap, "per-solve time limit, seconds");
  cmd->add_option("--a-bar", c.a_bar, "override: attack magnitude bound (per-unit)");
  cmd->add_option("--tau-bar", c.tau_bar, "override: overload upper bound");
  cmd->add_option("--big-m", c.big_m, "override: complementarity big-M");
  cmd->add_option("--kappa-max", c.kappa_max, "override: attacker resource cap");
  cmd->add_option("--overlap-rule", c.overlap_rule, "override: all|any")
      ->check(CLI::IsMember({"all", "any"}));
  cmd->add_option("--protect", c.protect, "protected substation ids (repeatable)");
}

ValidatedScenario load_scenario(const Common& c) {
  RawCase raw = parse_matpower_case(slurp(c.case_path));
  SubstationMap map;
  if (!c.map_path.empty()) map = parse_substation_map(slurp(c.map_path));
  ScenarioConfig cfg =
      c.config_path.empty() ? ScenarioConfig{} : parse_scenario_config(slurp(c.config_path));
  if (c.a_bar) cfg.a_bar = *c.a_bar;
  if (c.tau_bar) cfg.tau_bar = *c.tau_bar;
  if (c.big_m) cfg.big_m = *c.big_m;
  if (c.kappa_max) cfg.kappa_max = *c.kappa_max;
  if (c.overlap_rule)
    cfg.overlap_rule = *c.overlap_rule == "all" ? OverlapRule::all_covering
                                                : OverlapRule::any_covering;
  for (const auto& p : c.protect) cfg.protected_substations.insert(p);
  return validate_scenario(std::move(raw), std::move(map), std::move(cfg));
}

MilpLimits limits_of(const Common& c) { return {c.node_cap, c.time_cap}; }

std::set<int> protected_indices(const GridModel& g, const ScenarioConfig& cfg) {
  std::set<int> out;
  for (int s = 0; s < static_cast<int>(g.substation_ids.size()); ++s)
    if (cfg.protected_substations.count(g.substation_ids[s])) out.insert(s);
  return out;
}

LineRef parse_line_ref(const std::string& text) {
  auto comma = text.find(',');
  if (comma == std::string::npos)
    fail(errc::bad_config_value, "line must be given as FROM,TO (bus ids)");
  LineRef ref;
  try {
    ref.from = std::stoll(text.substr(0, comma));
    ref.to = std::stoll(text.substr(comma + 1));
  } catch (const std::exception&) {
    fail(errc::bad_config_value, "line must be given as FROM,TO (bus ids)");
  }
  return ref;
}

std::string fmt(double v) { return detail::format_double(v); }

json support_json(const GridModel& g, const std::set<int>& s) {
  json arr = json::array();
  for (int k : s) arr.push_back(g.substation_ids[k]);
  return arr;
}

void emit(const json& doc, Format f, const std::string& text, const std::string& tsv) {
  switch (f) {
    case Format::json_fmt: std::cout << doc.dump(2) << "\n"; break;
    case Format::tsv: std::cout << tsv; break;
    case Format::text: std::cout << text; break;
  }
}

// honored exit codes: 0 success, 1 usage, 2 input error, 3 solver
// undetermined, 4 internal
constexpr int kOk = 0, kInput = 2, kUndetermined = 3, kInternal = 4;

int cmd_parse(const Common& c, bool emit_case) {
  ValidatedScenario sc = load_scenario(c);
  GridModel g = build_grid_model(sc);
  if (emit_case) {
    std::cout << serialize_matpower_case(sc.raw);
    return kOk;
  }
  int gens = static_cast<int>(g.generator_buses().size());
  json doc = {{"buses", g.n},
              {"lines", g.m},
              {"generators", gens},
              {"base_mva", g.base_mva},
              {"substations", g.substation_ids},
              {"fingerprint", scenario_fingerprint(sc)}};
  std::ostringstream text, tsv;
  text << "buses " << g.n << "\nlines " << g.m << "\ngenerators " << gens << "\nbase_mva "
       << fmt(g.base_mva) << "\nsubstations " << g.substation_ids.size();
  for (const auto& id : g.substation_ids) text << " " << id;
  text << "\nfingerprint " << scenario_fingerprint(sc) << "\n";
  tsv << "buses\tlines\tgenerators\tbase_mva\tsubstations\n"
      << g.n << "\t" << g.m << "\t" << gens << "\t" << fmt(g.base_mva) << "\t"
      << g.substation_ids.size() << "\n";
  emit(doc, parse_format(c.format), text.str(), tsv.str());
  return kOk;
}

int cmd_sced(const Common& c) {
  ValidatedScenario sc = load_scenario(c);
  GridModel g = build_grid_model(sc);
  ScedProblem prob = make_sced_problem(g);
  ScedSolution sol = solve_sced(prob, sc.config.tolerances);
  KktResiduals res = kkt_residuals(prob, sol);

  json doc;
  doc["objective_dollars"] = sol.objective;
  doc["residuals"] = {{"stationarity", res.stationarity},
                      {"feasibility", res.feasibility},
                      {"complementarity", res.complementarity}};
  json dispatch = json::array(), flows = json::array();
  std::ostringstream text, tsv;
  text << "objective_dollars " << fmt(sol.objective) << "\n";
  tsv << "kind\tid_from\tid_to\tmw\n";
  for (int i : g.generator_buses()) {
    double mw = sol.p_g[i] * g.base_mva;
    dispatch.push_back({{"bus", g.bus_ids[i]}, {"mw", mw}});
    text << "gen " << g.bus_ids[i] << " " << fmt(mw) << " MW\n";
    tsv << "gen\t" << g.bus_ids[i] << "\t\t" << fmt(mw) << "\n";
  }
  for (int e = 0; e < g.m; ++e) {
    double mw = sol.flows[e] * g.base_mva;
    flows.push_back({{"from", g.lines[e].from_id}, {"to", g.lines[e].to_id}, {"mw", mw}});
    text << "flow (" << g.lines[e].from_id << "," << g.lines[e].to_id << ") " << fmt(mw)
         << " MW\n";
    tsv << "flow\t" << g.lines[e].from_id << "\t" << g.lines[e].to_id << "\t" << fmt(mw) << "\n";
  }
  doc["dispatch"] = dispatch;
  doc["flows"] = flows;
  text << "residuals stationarity " << fmt(res.stationarity) << " feasibility "
       << fmt(res.feasibility) << " complementarity " << fmt(res.complementarity) << "\n";
  emit(doc, parse_format(c.format), text.str(), tsv.str());
  return kOk;
}

int cmd_attack(const Common& c, const std::string& line_text, double tau) {
  ValidatedScenario sc = load_scenario(c);
  GridModel g = build_grid_model(sc);
  AttackGoal goal = make_attack_goal(g, sc.config, parse_line_ref(line_text), tau);
  AttackResult r = security_index(g, sc.config, goal, protected_indices(g, sc.config),
                                  limits_of(c));
  if (r.status == SolveOutcome::undetermined) {
    std::cerr << "attack: solver limit reached before a verdict\n";
    return kUndetermined;
  }
  json doc;
  doc["goal"] = {{"line", {goal.line.from, goal.line.to}}, {"tau_tilde", goal.tau_tilde}};
  std::ostringstream text, tsv;
  tsv << "goal\ttau_tilde\tkappa_star\tsupport\tachieved_tau\n";
  if (r.status == SolveOutcome::infeasible) {
    doc["feasible"] = false;
    doc["kappa_star"] = 0;
    text << detail::goal_name(goal) << ": infeasible (kappa* = 0)\n";
    tsv << goal.line.from << "," << goal.line.to << "\t" << fmt(goal.tau_tilde)
        << "\t0\t{}\t\n";
  } else {
    std::set<int> support;
    for (int s = 0; s < r.witness->delta.size(); ++s)
      if (r.witness->delta[s]) support.insert(s);
    ReplayResult rep = replay_attack(g, sc.config, goal, *r.witness);
    doc["feasible"] = true;
    doc["kappa_star"] = r.kappa_star;
    doc["support"] = support_json(g, support);
    doc["achieved_tau"] = rep.achieved_tau;
    doc["replay_reached"] = rep.reached;
    doc["nodes"] = r.nodes;
    text << detail::goal_name(goal) << ": kappa* = " << r.kappa_star << " support "
         << detail::support_names(g, support) << " achieved tau " << fmt(rep.achieved_tau)
         << (rep.reached ? " (replay ok)" : " (replay FAILED)") << "\n";
    tsv << goal.line.from << "," << goal.line.to << "\t" << fmt(goal.tau_tilde) << "\t"
        << r.kappa_star << "\t" << detail::support_names(g, support) << "\t"
        << fmt(rep.achieved_tau) << "\n";
    if (!rep.reached) {
      emit(doc, parse_format(c.format), text.str(), tsv.str());
      std::cerr << "attack: witness failed replay validation\n";
      return kInternal;
    }
  }
  emit(doc, parse_format(c.format), text.str(), tsv.str());
  return kOk;
}

json collection_json(const GridModel& g, const CiCollection& col) {
  json doc;
  doc["goal"] = {{"line", {col.goal.line.from, col.goal.line.to}},
                 {"tau_tilde", col.goal.tau_tilde}};
  doc["kappa_star"] = col.kappa_star;
  doc["exhaustive"] = col.exhaustive;
  json members = json::array();
  for (const auto& m : col.members) members.push_back(support_json(g, m.substations));
  doc["correlation_indices"] = members;
  return doc;
}

int cmd_ci_enumerate(const Common& c, const std::string& line_text, double tau) {
  ValidatedScenario sc = load_scenario(c);
  GridModel g = build_grid_model(sc);
  AttackGoal goal = make_attack_goal(g, sc.config, parse_line_ref(line_text), tau);
  std::cerr << "enumerating minimal supports for " << detail::goal_name(goal) << "...\n";
  CiCollection col =
      enumerate_cis(g, sc.config, goal, protected_indices(g, sc.config), limits_of(c), c.jobs);
  if (!col.exhaustive && col.members.empty() && col.kappa_star == 0) {
    std::cerr << "ci enumerate: solver limit reached before a verdict\n";
    return kUndetermined;
  }
  emit(collection_json(g, col), parse_format(c.format), to_text(g, col), to_tsv(g, col));
  return col.exhaustive ? kOk : kUndetermined;
}

int cmd_ci_multi(const Common& c, const std::vector<std::string>& line_texts, double tau,
                 const std::string& mode_text) {
  ValidatedScenario sc = load_scenario(c);
  GridModel g = build_grid_model(sc);
  std::vector<AttackGoal> goals;
  for (const auto& lt : line_texts)
    goals.push_back(make_attack_goal(g, sc.config, parse_line_ref(lt), tau));
  MultiGoalMode mode =
      mode_text == "union" ? MultiGoalMode::union_of_cis : MultiGoalMode::exact;
  MultiGoalResult r = multi_goal_ci(g, sc.config, goals, mode, limits_of(c), c.jobs);

  json doc;
  doc["mode"] = mode_text;
  doc["tau_tilde"] = tau;
  json goal_arr = json::array();
  for (const auto& goal : goals) goal_arr.push_back({goal.line.from, goal.line.to});
  doc["goals"] = goal_arr;
  doc["substations"] = support_json(g, r.substations);
  doc["kappa"] = r.kappa;
  doc["lower_bound_ok"] = r.lower_bound_ok;
  std::ostringstream text, tsv;
  text << "joint support " << detail::support_names(g, r.substations) << " kappa " << r.kappa
       << (r.lower_bound_ok ? "" : " (below individual optimum!)") << "\n";
  tsv << "substations\tkappa\n" << detail::support_names(g, r.substations) << "\t" << r.kappa
      << "\n";
  emit(doc, parse_format(c.format), text.str(), tsv.str());
  return kOk;
}

int cmd_defense_line(const Common& c, const std::string& line_text, double tau,
                     const std::vector<std::string>& observed_ids) {
  ValidatedScenario sc = load_scenario(c);
  GridModel g = build_grid_model(sc);
  AttackGoal goal = make_attack_goal(g, sc.config, parse_line_ref(line_text), tau);
  std::set<int> observed;
  for (const auto& id : observed_ids) {
    auto it = std::find(g.substation_ids.begin(), g.substation_ids.end(), id);
    if (it == g.substation_ids.end())
      fail(errc::precondition, "unknown substation '" + id + "'");
    observed.insert(static_cast<int>(it - g.substation_ids.begin()));
  }
  std::set<int> d = defense_best_for_line(g, sc.config, goal, observed, limits_of(c));
  json doc = {{"goal", {{"line", {goal.line.from, goal.line.to}}, {"tau_tilde", tau}}},
              {"observed", support_json(g, observed)},
              {"protect", support_json(g, d)}};
  std::ostringstream text, tsv;
  text << "protect " << detail::support_names(g, d) << " to disable "
       << detail::support_names(g, observed) << " against " << detail::goal_name(goal) << "\n";
  tsv << "protect\n" << detail::support_names(g, d) << "\n";
  emit(doc, parse_format(c.format), text.str(), tsv.str());
  return kOk;
}

int cmd_defense_index(const Common& c, const std::string& line_text, double tau) {
  ValidatedScenario sc = load_scenario(c);
  GridModel g = build_grid_model(sc);
  AttackGoal goal = make_attack_goal(g, sc.config, parse_line_ref(line_text), tau);
  std::set<int> d = defense_against_cis(g, sc.config, goal, limits_of(c));
  json doc = {{"goal", {{"line", {goal.line.from, goal.line.to}}, {"tau_tilde", tau}}},
              {"protect", support_json(g, d)}};
  std::ostringstream text, tsv;
  text << "protect " << detail::support_names(g, d) << " to raise the security index of "
       << detail::goal_name(goal) << "\n";
  tsv << "protect\n" << detail::support_names(g, d) << "\n";
  emit(doc, parse_format(c.format), text.str(), tsv.str());
  return kOk;
}

int cmd_defense_metric(const Common& c, const std::string& substation_id, double tau) {
  ValidatedScenario sc = load_scenario(c);
  GridModel g = build_grid_model(sc);
  auto it = std::find(g.substation_ids.begin(), g.substation_ids.end(), substation_id);
  if (it == g.substation_ids.end())
    fail(errc::precondition, "unknown substation '" + substation_id + "'");
  int s = static_cast<int>(it - g.substation_ids.begin());
  std::cerr << "evaluating protection of " << substation_id << " across " << g.m
            << " lines...\n";
  DefenseReport rep = defense_effectiveness(g, sc.config, tau, s, nullptr, limits_of(c), c.jobs);

  json doc;
  doc["substation"] = substation_id;
  doc["tau_tilde"] = tau;
  doc["r_before"] = rep.r_before;
  doc["r_after"] = rep.r_after;
  doc["delta_r"] = rep.delta_r;
  doc["flagged"] = rep.flagged;
  json lines = json::array();
  for (const auto& row : rep.lines) {
    if (row.degenerate) continue;
    lines.push_back({{"line", {row.line.from, row.line.to}},
                     {"kappa", row.kappa},
                     {"kappa_beta", row.kappa_beta}});
  }
  doc["lines"] = lines;
  emit(doc, parse_format(c.format), to_text(g, rep), to_tsv(g, rep));
  return rep.flagged ? kUndetermined : kOk;
}

int cmd_sweep(const Common& c, const std::string& line_text, std::vector<double> tau_grid,
              std::vector<double> a_bar_grid) {
  ValidatedScenario sc = load_scenario(c);
  GridModel g = build_grid_model(sc);
  if (tau_grid.empty()) tau_grid = sc.config.tau_tilde;
  if (a_bar_grid.empty()) a_bar_grid = {sc.config.a_bar};
  SweepResult r =
      kappa_sweep(g, sc.config, parse_line_ref(line_text), tau_grid, a_bar_grid, limits_of(c));

  json doc;
  doc["line"] = {parse_line_ref(line_text).from, parse_line_ref(line_text).to};
  doc["tau_grid"] = tau_grid;
  doc["a_bar_grid"] = a_bar_grid;
  json table = json::array(), frontier = json::array();
  std::ostringstream text, tsv;
  bool any_undetermined = false;
  tsv << "a_bar";
  for (double t : tau_grid) tsv << "\t" << fmt(t);
  tsv << "\n";
  text << "kappa* by a_bar (rows) and tau_tilde (columns)\n";
  for (std::size_t i = 0; i < r.table.size(); ++i) {
    json row = json::array();
    tsv << fmt(a_bar_grid[i]);
    text << "a_bar " << fmt(a_bar_grid[i]) << ":";
    for (const auto& cell : r.table[i]) {
      std::string shown;
      if (cell.status == SolveOutcome::found) {
        shown = std::to_string(cell.kappa_star);
        row.push_back(cell.kappa_star);
      } else if (cell.status == SolveOutcome::infeasible) {
        shown = "-";
        row.push_back(nullptr);
      } else {
        shown = "?";
        row.push_back("undetermined");
        any_undetermined = true;
      }
      tsv << "\t" << shown;
      text << " " << shown;
    }
    tsv << "\n";
    text << "\n";
    table.push_back(row);
    json fr = json::array();
    text << "  frontier:";
    for (const auto& [t, k] : r.frontier[i]) {
      fr.push_back({{"tau_tilde", t}, {"kappa", k}});
      text << " (" << fmt(t) << "," << k << ")";
    }
    text << "\n";
    frontier.push_back(fr);
  }
  doc["kappa_star"] = table;
  doc["frontier"] = frontier;
  emit(doc, parse_format(c.format), text.str(), tsv.str());
  return any_undetermined ? kUndetermined : kOk;
}

int cmd_kb_build(const Common& c, const std::string& out_path) {
  ValidatedScenario sc = load_scenario(c);
  if (sc.config.goals.empty())
    fail(errc::bad_config_value, "kb build needs at least one goal in the scenario config");
  std::cerr << "building knowledge base over " << sc.config.goals.size() << " goals x "
            << sc.config.tau_tilde.size() << " thresholds...\n";
  KnowledgeBase kb = build_kb(sc, limits_of(c), c.jobs);
  std::string text = serialize_kb(kb);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out.good()) fail(errc::io_error, "cannot write '" + out_path + "'");
    out << text;
  }
  for (const auto& e : kb.entries)
    if (!e.exhaustive) {
      std::cerr << "kb build: some entries hit solver limits (stored non-exhaustive)\n";
      return kUndetermined;
    }
  return kOk;
}

int cmd_identify(const std::string& kb_path, const std::string& alerts_path, double threshold,
                 double window, const std::vector<std::string>& suspect,
                 const Common& c, bool have_scenario) {
  KnowledgeBase kb = parse_kb(slurp(kb_path));
  std::string fingerprint = kb.fingerprint;  // trusted unless a scenario is given
  if (have_scenario) fingerprint = scenario_fingerprint(load_scenario(c));

  std::set<std::string> suspected_ids(suspect.begin(), suspect.end());
  int rejected = 0;
  if (suspect.empty() && !alerts_path.empty()) {
    IngestResult ing =
        ingest_alerts(parse_alerts(slurp(alerts_path)), threshold, window, kb.substation_ids);
    suspected_ids = ing.suspected;
    rejected = ing.rejected;
    if (rejected) std::cerr << "identify: rejected " << rejected << " unknown-substation alerts\n";
  }
  std::map<std::string, int> index_of;
  for (std::size_t i = 0; i < kb.substation_ids.size(); ++i)
    index_of[kb.substation_ids[i]] = static_cast<int>(i);
  std::set<int> suspected;
  for (const auto& id : suspected_ids) {
    auto it = index_of.find(id);
    if (it == index_of.end())
      fail(errc::precondition, "suspected substation '" + id + "' not in the knowledge base");
    suspected.insert(it->second);
  }
  Assessment a = assess(kb, fingerprint, suspected);

  json doc;
  doc["suspected"] = json::array();
  for (int s : a.suspected) doc["suspected"].push_back(kb.substation_ids[s]);
  doc["rejected_alerts"] = rejected;
  json goals = json::array();
  std::ostringstream tsv;
  tsv << "line\ttau_tilde\tverdict\tdeficit\tmatched\n";
  for (const auto& v : a.goals) {
    json gj = {{"line", {v.line.from, v.line.to}},
               {"tau_tilde", v.tau_tilde},
               {"verdict", verdict_name(v.verdict)}};
    if (v.verdict == Verdict::near_miss) gj["deficit"] = v.deficit;
    if (v.verdict == Verdict::reached) {
      json m = json::array();
      for (const auto& ci : v.matched) {
        json one = json::array();
        for (int s : ci) one.push_back(kb.substation_ids[s]);
        m.push_back(one);
      }
      gj["matched"] = m;
    }
    goals.push_back(gj);
    tsv << v.line.from << "," << v.line.to << "\t" << fmt(v.tau_tilde) << "\t"
        << verdict_name(v.verdict) << "\t"
        << (v.verdict == Verdict::near_miss ? std::to_string(v.deficit) : "") << "\t";
    bool first = true;
    for (const auto& ci : v.matched) {
      if (!first) tsv << " ";
      tsv << "{";
      bool f2 = true;
      for (int s : ci) {
        if (!f2) tsv << ",";
        tsv << kb.substation_ids[s];
        f2 = false;
      }
      tsv << "}";
      first = false;
    }
    tsv << "\n";
  }
  doc["goals"] = goals;
  emit(doc, parse_format(c.format), to_text(a, kb), tsv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"correlation-index toolkit for transmission-grid attack analysis"};
  app.require_subcommand(1);

  Common c;
  bool emit_case = false;
  std::string line_text, mode_text = "union", substation_id, out_path, kb_path;
  std::string alerts_path;
  double tau = 0.05, threshold = 0.5, window = 1e18;
  std::vector<std::string> line_texts, observed_ids, suspect;
  std::vector<double> tau_grid, a_bar_grid;

  auto* p_parse = app.add_subcommand("parse", "validate inputs and summarize the scenario");
  add_common(p_parse, c, /*need_map=*/false);
  p_parse->add_flag("--emit", emit_case, "print the normalized case file");

  auto* p_sced = app.add_subcommand("sced", "baseline dispatch, flows, and KKT residuals");
  add_common(p_sced, c);

  auto* p_attack = app.add_subcommand("attack", "security index and witness for one goal");
  add_common(p_attack, c);
  p_attack->add_option("--line", line_text, "goal line FROM,TO")->required();
  p_attack->add_option("--tau", tau, "overload threshold tau_tilde")->required();

  auto* p_ci = app.add_subcommand("ci", "correlation-index constructions");
  p_ci->require_subcommand(1);
  auto* p_ci_enum = p_ci->add_subcommand("enumerate", "all CIs for one goal");
  add_common(p_ci_enum, c);
  p_ci_enum->add_option("--line", line_text, "goal line FROM,TO")->required();
  p_ci_enum->add_option("--tau", tau, "overload threshold tau_tilde")->required();
  auto* p_ci_multi = p_ci->add_subcommand("multi", "joint support for several goals");
  add_common(p_ci_multi, c);
  p_ci_multi->add_option("--line", line_texts, "goal line FROM,TO (repeatable)")->required();
  p_ci_multi->add_option("--tau", tau, "overload threshold tau_tilde")->required();
  p_ci_multi->add_option("--mode", mode_text, "union|exact")
      ->check(CLI::IsMember({"union", "exact"}));

  auto* p_def = app.add_subcommand("defense", "protection strategies and metrics");
  p_def->require_subcommand(1);
  auto* p_def_line = p_def->add_subcommand("line", "minimal protection inside an observed attack");
  add_common(p_def_line, c);
  p_def_line->add_option("--line", line_text, "goal line FROM,TO")->required();
  p_def_line->add_option("--tau", tau, "overload threshold tau_tilde")->required();
  p_def_line->add_option("--observed", observed_ids, "observed attacked substation ids")
      ->required();
  auto* p_def_index = p_def->add_subcommand("index", "minimal protection raising the index");
  add_common(p_def_index, c);
  p_def_index->add_option("--line", line_text, "goal line FROM,TO")->required();
  p_def_index->add_option("--tau", tau, "overload threshold tau_tilde")->required();
  auto* p_def_metric = p_def->add_subcommand("metric", "grid-wide effect of one protection");
  add_common(p_def_metric, c);
  p_def_metric->add_option("--substation", substation_id, "substation id to protect")->required();
  p_def_metric->add_option("--tau", tau, "overload threshold tau_tilde")->required();

  auto* p_sweep = app.add_subcommand("sweep", "kappa* grid over tau_tilde and a_bar");
  add_common(p_sweep, c);
  p_sweep->add_option("--line", line_text, "goal line FROM,TO")->required();
  p_sweep->add_option("--tau-grid", tau_grid, "tau_tilde values (default: config)");
  p_sweep->add_option("--a-bar-grid", a_bar_grid, "a_bar values (default: config a_bar)");

  auto* p_kb = app.add_subcommand("kb", "knowledge-base operations");
  p_kb->require_subcommand(1);
  auto* p_kb_build = p_kb->add_subcommand("build", "enumerate CIs for every configured goal");
  add_common(p_kb_build, c);
  p_kb_build->add_option("--out", out_path, "output path (default stdout)");

  auto* p_ident = app.add_subcommand("identify", "assess a suspected intrusion set");
  p_ident->add_option("--kb", kb_path, "knowledge-base file")->required();
  p_ident->add_option("--alerts", alerts_path, "alert stream (JSONL, '-' for stdin)");
  p_ident->add_option("--suspect", suspect, "suspected substation ids (bypasses --alerts)");
  p_ident->add_option("--threshold", threshold, "confidence threshold");
  p_ident->add_option("--window", window, "sliding-window length");
  p_ident->add_option("--format", c.format, "output format: text|tsv|json")
      ->check(CLI::IsMember({"text", "tsv", "json"}));
  p_ident->add_option("--case", c.case_path, "case file (verifies the fingerprint)");
  p_ident->add_option("--map", c.map_path, "substation map");
  p_ident->add_option("--config", c.config_path, "scenario config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // --help is success; anything else is a usage error
  }

  try {
    if (p_parse->parsed()) return cmd_parse(c, emit_case);
    if (p_sced->parsed()) return cmd_sced(c);
    if (p_attack->parsed()) return cmd_attack(c, line_text, tau);
    if (p_ci_enum->parsed()) return cmd_ci_enumerate(c, line_text, tau);
    if (p_ci_multi->parsed()) return cmd_ci_multi(c, line_texts, tau, mode_text);
    if (p_def_line->parsed()) return cmd_defense_line(c, line_text, tau, observed_ids);
    if (p_def_index->parsed()) return cmd_defense_index(c, line_text, tau);
    if (p_def_metric->parsed()) return cmd_defense_metric(c, substation_id, tau);
    if (p_sweep->parsed()) return cmd_sweep(c, line_text, tau_grid, a_bar_grid);
    if (p_kb_build->parsed()) return cmd_kb_build(c, out_path);
    if (p_ident->parsed())
      return cmd_identify(kb_path, alerts_path, threshold, window, suspect, c,
                          !c.case_path.empty());
    std::cerr << "no subcommand dispatched\n";
    return 1;
  } catch (const error& e) {
    std::cerr << "cigrid: " << e.what() << "\n";
    return e.code() == errc::undetermined ? kUndetermined : kInput;
  } catch (const std::exception& e) {
    std::cerr << "cigrid: internal error: " << e.what() << "\n";
    return kInternal;
  }
}
