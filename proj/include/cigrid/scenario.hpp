#pragma once

// Substation service-area maps, scenario configuration, and cross-validation
// of the parsed inputs.

#include <algorithm>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cigrid/errors.hpp"
#include "cigrid/matpower.hpp"

namespace cigrid {

struct Substation {
  std::string id;
  std::set<long long> buses;
  bool operator==(const Substation&) const = default;
};

struct SubstationMap {
  std::vector<Substation> substations;

  std::size_t count() const { return substations.size(); }

  const Substation* find(const std::string& id) const {
    for (const auto& s : substations)
      if (s.id == id) return &s;
    return nullptr;
  }

  int index_of(const std::string& id) const {
    for (std::size_t k = 0; k < substations.size(); ++k)
      if (substations[k].id == id) return static_cast<int>(k);
    return -1;
  }

  bool operator==(const SubstationMap&) const = default;
};

struct Tolerances {
  double feasibility = 1e-6;
  double duality = 1e-6;
  double integrality = 1e-6;
  double degeneracy = 1e-6;  // per-unit floor on |P_f(0)| for goal lines
  bool operator==(const Tolerances&) const = default;
};

/// A goal line named by its (from, to) bus pair as configured.
struct LineRef {
  long long from = 0;
  long long to = 0;
  auto operator<=>(const LineRef&) const = default;
};

/// Overlap semantics for the attack region: a bus covered by several
/// substations is corruptible only if all covering substations are attacked
/// (conjunctive), or if any is (disjunctive, for sensitivity studies).
enum class OverlapRule { all_covering, any_covering };

struct ScenarioConfig {
  double a_bar = 0.1;   // per-unit bound on each attack component
  double big_m = 500.0;
  double tau_bar = 1.0;
  std::vector<double> tau_tilde = {0.025, 0.05, 0.075, 0.10};
  std::vector<LineRef> goals;
  std::set<std::string> protected_substations;
  Tolerances tolerances;
  OverlapRule overlap_rule = OverlapRule::all_covering;
  bool regularize_cost = false;  // Tikhonov epsilon on zero c2 entries
  int kappa_max = -1;            // -1: defaults to the substation count

  bool operator==(const ScenarioConfig&) const = default;
};

inline SubstationMap parse_substation_map(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::syntax_error, std::string("substation map: ") + e.what());
  }
  if (!doc.contains("substations") || !doc["substations"].is_array())
    fail(errc::bad_format, "substation map needs a top-level 'substations' array");
  SubstationMap map;
  std::set<std::string> ids;
  for (const auto& entry : doc["substations"]) {
    Substation s;
    if (!entry.contains("id") || !entry.contains("buses"))
      fail(errc::bad_format, "substation entry needs 'id' and 'buses'");
    s.id = entry["id"].get<std::string>();
    if (!ids.insert(s.id).second)
      fail(errc::duplicate_substation, "duplicate substation id '" + s.id + "'");
    for (const auto& b : entry["buses"]) s.buses.insert(b.get<long long>());
    if (s.buses.empty()) fail(errc::empty_substation, "substation '" + s.id + "' lists no buses");
    map.substations.push_back(std::move(s));
  }
  return map;
}

inline SubstationMap parse_substation_map(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_substation_map(text);
}

inline ScenarioConfig parse_scenario_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::syntax_error, std::string("scenario config: ") + e.what());
  }
  ScenarioConfig cfg;
  try {
    if (doc.contains("a_bar")) cfg.a_bar = doc["a_bar"].get<double>();
    if (doc.contains("big_m")) cfg.big_m = doc["big_m"].get<double>();
    if (doc.contains("tau_bar")) cfg.tau_bar = doc["tau_bar"].get<double>();
    if (doc.contains("tau_tilde")) cfg.tau_tilde = doc["tau_tilde"].get<std::vector<double>>();
    if (doc.contains("goals")) {
      cfg.goals.clear();
      for (const auto& g : doc["goals"]) {
        if (!g.is_array() || g.size() != 2)
          fail(errc::bad_format, "each goal must be a [from, to] pair");
        cfg.goals.push_back({g[0].get<long long>(), g[1].get<long long>()});
      }
    }
    if (doc.contains("protected")) {
      for (const auto& p : doc["protected"])
        cfg.protected_substations.insert(p.get<std::string>());
    }
    if (doc.contains("tolerances")) {
      const auto& t = doc["tolerances"];
      if (t.contains("feasibility")) cfg.tolerances.feasibility = t["feasibility"].get<double>();
      if (t.contains("duality")) cfg.tolerances.duality = t["duality"].get<double>();
      if (t.contains("integrality")) cfg.tolerances.integrality = t["integrality"].get<double>();
      if (t.contains("degeneracy")) cfg.tolerances.degeneracy = t["degeneracy"].get<double>();
    }
    if (doc.contains("overlap_rule")) {
      std::string rule = doc["overlap_rule"].get<std::string>();
      if (rule == "all") cfg.overlap_rule = OverlapRule::all_covering;
      else if (rule == "any") cfg.overlap_rule = OverlapRule::any_covering;
      else fail(errc::bad_config_value, "overlap_rule must be 'all' or 'any'");
    }
    if (doc.contains("regularize_cost")) cfg.regularize_cost = doc["regularize_cost"].get<bool>();
    if (doc.contains("kappa_max")) cfg.kappa_max = doc["kappa_max"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(errc::bad_format, std::string("scenario config: ") + e.what());
  }
  return cfg;
}

inline ScenarioConfig parse_scenario_config(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario_config(text);
}

/// The three validated inputs, cross-checked against each other.
struct ValidatedScenario {
  RawCase raw;
  SubstationMap map;
  ScenarioConfig config;
};

inline ValidatedScenario validate_scenario(RawCase raw, SubstationMap map, ScenarioConfig cfg) {
  validate_raw_case(raw);

  std::set<long long> bus_ids;
  for (const auto& row : raw.bus) bus_ids.insert(static_cast<long long>(row[col::BUS_I]));

  // coverage and overlap
  std::map<long long, int> cover_count;
  for (const auto& s : map.substations) {
    for (long long b : s.buses) {
      if (!bus_ids.count(b))
        fail(errc::unknown_bus, "substation '" + s.id + "' lists unknown bus " + std::to_string(b));
      ++cover_count[b];
    }
  }
  for (long long b : bus_ids) {
    if (!cover_count.count(b))
      fail(errc::coverage_gap, "bus " + std::to_string(b) + " belongs to no service area");
  }
  std::set<long long> gen_buses;
  for (const auto& g : raw.gen)
    if (g[col::GEN_STATUS] != 0.0 && g[col::PMAX] > 0.0)
      gen_buses.insert(static_cast<long long>(g[col::GEN_BUS]));
  for (const auto& [b, count] : cover_count) {
    if (count >= 2 && gen_buses.count(b))
      fail(errc::overlap_generation,
           "bus " + std::to_string(b) + " is in overlapped service areas but has generation");
  }

  if (!(cfg.a_bar >= 0.0)) fail(errc::bad_config_value, "a_bar must be nonnegative");
  if (!(cfg.big_m > 0.0)) fail(errc::bad_config_value, "big_m must be positive");
  if (!(cfg.tau_bar > 0.0)) fail(errc::bad_config_value, "tau_bar must be positive");
  for (double t : cfg.tau_tilde) {
    if (!(t > 0.0)) fail(errc::bad_tau, "flow increase must be strictly positive");
    if (t > cfg.tau_bar) fail(errc::bad_tau, "flow increase exceeds tau_bar");
  }
  for (const auto& p : cfg.protected_substations) {
    if (!map.find(p)) fail(errc::bad_config_value, "protected substation '" + p + "' is not in the map");
  }

  // goal lines must exist among in-service branches
  for (const auto& g : cfg.goals) {
    bool found = false;
    for (const auto& row : raw.branch) {
      if (row[col::BR_STATUS] == 0.0) continue;
      if (static_cast<long long>(row[col::F_BUS]) == g.from &&
          static_cast<long long>(row[col::T_BUS]) == g.to) {
        found = true;
        break;
      }
    }
    if (!found)
      fail(errc::goal_out_of_range, "goal line (" + std::to_string(g.from) + "," +
                                        std::to_string(g.to) + ") is not an in-service branch");
  }

  return ValidatedScenario{std::move(raw), std::move(map), std::move(cfg)};
}

}  // namespace cigrid
