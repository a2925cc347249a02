#pragma once

// Attack-identification knowledge base: precomputed correlation-index
// collections per (goal line, tau_tilde), persisted as a self-describing text
// file keyed by a scenario fingerprint, plus alert-stream ingestion and the
// verdict logic that maps a suspected intrusion set to likely consequences.

#include <charconv>
#include <climits>
#include <cstdio>
#include <istream>

#include "cigrid/ci.hpp"

namespace cigrid {

namespace detail {

/// FNV-1a 64-bit; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string canonical_map_json(const SubstationMap& map) {
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : map.substations) {
    nlohmann::json e;
    e["id"] = s.id;
    e["buses"] = s.buses;  // std::set -> sorted array
    subs.push_back(e);
  }
  nlohmann::json doc;
  doc["substations"] = subs;
  return doc.dump();
}

inline std::string canonical_config_json(const ScenarioConfig& cfg) {
  nlohmann::json doc;
  doc["a_bar"] = cfg.a_bar;
  doc["big_m"] = cfg.big_m;
  doc["tau_bar"] = cfg.tau_bar;
  doc["tau_tilde"] = cfg.tau_tilde;
  nlohmann::json goals = nlohmann::json::array();
  for (const auto& g : cfg.goals) goals.push_back({g.from, g.to});
  doc["goals"] = goals;
  doc["protected"] = cfg.protected_substations;
  doc["tolerances"] = {{"feasibility", cfg.tolerances.feasibility},
                       {"duality", cfg.tolerances.duality},
                       {"integrality", cfg.tolerances.integrality},
                       {"degeneracy", cfg.tolerances.degeneracy}};
  doc["overlap_rule"] = cfg.overlap_rule == OverlapRule::all_covering ? "all" : "any";
  doc["regularize_cost"] = cfg.regularize_cost;
  doc["kappa_max"] = cfg.kappa_max;
  return doc.dump();
}

/// Shortest-round-trip decimal form, so serialization is byte-stable.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace detail

/// Hash of the three validated inputs; a knowledge base only answers queries
/// for the exact scenario it was built from.
inline std::string scenario_fingerprint(const ValidatedScenario& sc) {
  std::uint64_t h = detail::fnv1a(serialize_matpower_case(sc.raw));
  h = detail::fnv1a(detail::canonical_map_json(sc.map), h);
  h = detail::fnv1a(detail::canonical_config_json(sc.config), h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct KbEntry {
  LineRef line;
  double tau_tilde = 0.0;
  int kappa_star = 0;                    // 0: no support of any size works
  std::vector<std::set<int>> cis;        // substation index sets, lexicographic
  bool exhaustive = true;
};

struct KnowledgeBase {
  std::string fingerprint;
  std::vector<std::string> substation_ids;  // index order used by entries
  std::vector<KbEntry> entries;             // goal order x tau order from the config
};

/// Enumerate CIs for every goal line and tau_tilde in the scenario config.
/// Witnesses are replay-validated inside the solver; only membership survives
/// into the (immutable) knowledge base.
inline KnowledgeBase build_kb(const ValidatedScenario& sc, const MilpLimits& limits = {},
                              int jobs = 1) {
  GridModel g = build_grid_model(sc);
  KnowledgeBase kb;
  kb.fingerprint = scenario_fingerprint(sc);
  kb.substation_ids = g.substation_ids;
  std::set<int> protected_subs;
  for (int s = 0; s < static_cast<int>(g.substation_ids.size()); ++s)
    if (sc.config.protected_substations.count(g.substation_ids[s])) protected_subs.insert(s);
  for (const auto& line : sc.config.goals) {
    for (double tau : sc.config.tau_tilde) {
      AttackGoal goal = make_attack_goal(g, sc.config, line, tau);
      CiCollection col = enumerate_cis(g, sc.config, goal, protected_subs, limits, jobs);
      KbEntry e;
      e.line = line;
      e.tau_tilde = tau;
      e.kappa_star = col.kappa_star;
      e.exhaustive = col.exhaustive;
      for (const auto& m : col.members) e.cis.push_back(m.substations);
      kb.entries.push_back(std::move(e));
    }
  }
  return kb;
}

inline std::string serialize_kb(const KnowledgeBase& kb) {
  std::ostringstream os;
  os << "cigrid-kb 1\n";
  os << "fingerprint " << kb.fingerprint << "\n";
  os << "substations " << kb.substation_ids.size();
  for (const auto& id : kb.substation_ids) os << " " << id;
  os << "\n";
  os << "entries " << kb.entries.size() << "\n";
  for (const auto& e : kb.entries) {
    os << "entry " << e.line.from << " " << e.line.to << " " << detail::format_double(e.tau_tilde)
       << " kappa " << e.kappa_star << " exhaustive " << (e.exhaustive ? 1 : 0) << " members "
       << e.cis.size() << "\n";
    for (const auto& ci : e.cis) {
      os << " ";
      for (int s : ci) os << " " << kb.substation_ids.at(s);
      os << "\n";
    }
  }
  return os.str();
}

inline KnowledgeBase parse_kb(std::istream& in) {
  KnowledgeBase kb;
  std::string word;
  auto need = [&](const std::string& expect) {
    if (!(in >> word) || word != expect)
      fail(errc::bad_format, "knowledge base: expected '" + expect + "', got '" + word + "'");
  };
  need("cigrid-kb");
  int version = 0;
  if (!(in >> version) || version != 1)
    fail(errc::bad_format, "knowledge base: unsupported format version");
  need("fingerprint");
  if (!(in >> kb.fingerprint)) fail(errc::bad_format, "knowledge base: missing fingerprint");
  need("substations");
  std::size_t n_subs = 0;
  if (!(in >> n_subs)) fail(errc::bad_format, "knowledge base: missing substation count");
  std::map<std::string, int> index_of;
  for (std::size_t i = 0; i < n_subs; ++i) {
    if (!(in >> word)) fail(errc::bad_format, "knowledge base: truncated substation list");
    index_of[word] = static_cast<int>(i);
    kb.substation_ids.push_back(word);
  }
  need("entries");
  std::size_t n_entries = 0;
  if (!(in >> n_entries)) fail(errc::bad_format, "knowledge base: missing entry count");
  std::string line_text;
  std::getline(in, line_text);  // consume rest of the count line
  for (std::size_t i = 0; i < n_entries; ++i) {
    if (!std::getline(in, line_text)) fail(errc::bad_format, "knowledge base: truncated entries");
    std::istringstream hs(line_text);
    KbEntry e;
    std::string k1, k2, k3;
    std::size_t n_members = 0;
    int exhaustive = 0;
    if (!(hs >> word >> e.line.from >> e.line.to >> e.tau_tilde >> k1 >> e.kappa_star >> k2 >>
          exhaustive >> k3 >> n_members) ||
        word != "entry" || k1 != "kappa" || k2 != "exhaustive" || k3 != "members")
      fail(errc::bad_format, "knowledge base: malformed entry header: " + line_text);
    e.exhaustive = exhaustive != 0;
    for (std::size_t m = 0; m < n_members; ++m) {
      if (!std::getline(in, line_text)) fail(errc::bad_format, "knowledge base: truncated CI list");
      std::istringstream ms(line_text);
      std::set<int> ci;
      while (ms >> word) {
        auto it = index_of.find(word);
        if (it == index_of.end())
          fail(errc::bad_format, "knowledge base: CI names unknown substation '" + word + "'");
        ci.insert(it->second);
      }
      if (ci.empty()) fail(errc::bad_format, "knowledge base: empty CI line");
      e.cis.push_back(std::move(ci));
    }
    kb.entries.push_back(std::move(e));
  }
  return kb;
}

inline KnowledgeBase parse_kb(const std::string& text) {
  std::istringstream in(text);
  return parse_kb(in);
}

// ---------------------------------------------------------------------------
// Alert ingestion

struct AlertRecord {
  double t = 0.0;
  std::string substation;
  double confidence = 0.0;
};

/// Newline-delimited JSON records {"t":..,"substation":..,"confidence":..}.
/// Blank lines are skipped; malformed lines are an error.
inline std::vector<AlertRecord> parse_alerts(std::istream& in) {
  std::vector<AlertRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
      AlertRecord r;
      r.t = doc.at("t").get<double>();
      r.substation = doc.at("substation").get<std::string>();
      r.confidence = doc.at("confidence").get<double>();
      if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
        fail(errc::bad_format, "alert line " + std::to_string(lineno) + ": confidence outside [0,1]");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      fail(errc::bad_format, "alert line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<AlertRecord> parse_alerts(const std::string& text) {
  std::istringstream in(text);
  return parse_alerts(in);
}

struct IngestResult {
  std::set<std::string> suspected;  // substation ids
  int rejected = 0;                 // records naming unknown substations
};

/// Sliding-window suspected set: substations whose maximum confidence within
/// `window` of the newest timestamp reaches `threshold`. Records must be
/// time-ordered.
inline IngestResult ingest_alerts(const std::vector<AlertRecord>& records, double threshold,
                                  double window, const std::vector<std::string>& known_ids) {
  if (!(threshold >= 0.0) || !(window >= 0.0))
    fail(errc::bad_config_value, "alert threshold and window must be nonnegative");
  std::set<std::string> known(known_ids.begin(), known_ids.end());
  IngestResult out;
  if (records.empty()) return out;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].t < records[i - 1].t)
      fail(errc::precondition, "alert records must be time-ordered");
  const double t_end = records.back().t;
  std::map<std::string, double> best;
  for (const auto& r : records) {
    if (!known.count(r.substation)) {
      ++out.rejected;
      continue;
    }
    if (r.t < t_end - window) continue;
    double& b = best[r.substation];
    b = std::max(b, r.confidence);
  }
  for (const auto& [id, conf] : best)
    if (conf >= threshold) out.suspected.insert(id);
  return out;
}

// ---------------------------------------------------------------------------
// Assessment

enum class Verdict { reached, safe_by_cardinality, near_miss, unknown };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::reached: return "REACHED";
    case Verdict::safe_by_cardinality: return "SAFE_BY_CARDINALITY";
    case Verdict::near_miss: return "NEAR_MISS";
    case Verdict::unknown: return "UNKNOWN";
  }
  return "?";
}

struct GoalVerdict {
  LineRef line;
  double tau_tilde = 0.0;
  Verdict verdict = Verdict::unknown;
  int deficit = 0;                       // smallest |CI \ suspected| for near misses
  std::vector<std::set<int>> matched;    // contained CIs for REACHED, lexicographic
};

struct Assessment {
  std::set<int> suspected;  // substation indices
  std::vector<GoalVerdict> goals;
};

/// Core verdict logic; `fingerprint` must match the knowledge base exactly.
inline Assessment assess(const KnowledgeBase& kb, const std::string& fingerprint,
                         const std::set<int>& suspected) {
  if (fingerprint != kb.fingerprint)
    fail(errc::stale_kb, "stale knowledge base: fingerprint mismatch (kb " + kb.fingerprint +
                             ", scenario " + fingerprint + ")");
  for (int s : suspected)
    if (s < 0 || s >= static_cast<int>(kb.substation_ids.size()))
      fail(errc::precondition, "suspected substation index out of range");
  Assessment out;
  out.suspected = suspected;
  auto contains = [&](const std::set<int>& ci) {
    return std::includes(suspected.begin(), suspected.end(), ci.begin(), ci.end());
  };
  for (const auto& e : kb.entries) {
    GoalVerdict v;
    v.line = e.line;
    v.tau_tilde = e.tau_tilde;
    if (e.kappa_star == 0) {
      // no support of any size works; safe whenever the enumeration is trusted
      v.verdict = e.exhaustive ? Verdict::safe_by_cardinality : Verdict::unknown;
      out.goals.push_back(std::move(v));
      continue;
    }
    for (const auto& ci : e.cis)
      if (contains(ci)) v.matched.push_back(ci);
    if (!v.matched.empty()) {
      v.verdict = Verdict::reached;
    } else if (static_cast<int>(suspected.size()) < e.kappa_star) {
      // kappa_star is an exact optimum whenever it is recorded, but a
      // non-exhaustive entry signals solver limits; stay conservative
      v.verdict = e.exhaustive ? Verdict::safe_by_cardinality : Verdict::unknown;
    } else if (!e.exhaustive || e.cis.empty()) {
      v.verdict = Verdict::unknown;
    } else {
      int best = INT_MAX;
      for (const auto& ci : e.cis) {
        int d = 0;
        for (int s : ci)
          if (!suspected.count(s)) ++d;
        best = std::min(best, d);
      }
      v.verdict = Verdict::near_miss;
      v.deficit = best;
    }
    out.goals.push_back(std::move(v));
  }
  return out;
}

/// Convenience overload: checks the fingerprint of `sc` and resolves
/// substation ids through the knowledge base's stored index order.
inline Assessment assess(const KnowledgeBase& kb, const ValidatedScenario& sc,
                         const std::set<std::string>& suspected_ids) {
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
  return assess(kb, scenario_fingerprint(sc), suspected);
}

inline std::string to_text(const Assessment& a, const KnowledgeBase& kb) {
  std::ostringstream os;
  os << "suspected:";
  for (int s : a.suspected) os << " " << kb.substation_ids.at(s);
  if (a.suspected.empty()) os << " (none)";
  os << "\n";
  for (const auto& v : a.goals) {
    os << "(" << v.line.from << "," << v.line.to << ") tau " << detail::format_double(v.tau_tilde)
       << ": " << verdict_name(v.verdict);
    if (v.verdict == Verdict::near_miss) os << "(" << v.deficit << ")";
    if (v.verdict == Verdict::reached) {
      os << " via";
      for (const auto& ci : v.matched) {
        os << " {";
        bool first = true;
        for (int s : ci) {
          if (!first) os << ",";
          os << kb.substation_ids.at(s);
          first = false;
        }
        os << "}";
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace cigrid
