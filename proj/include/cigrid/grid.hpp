#pragma once

// Immutable DC grid model: incidence structure, shift-factor (PTDF) matrix,
// and DC flow evaluation. All quantities are per-unit on the system base.

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cigrid/errors.hpp"
#include "cigrid/scenario.hpp"

namespace cigrid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Line {
  int from = 0;           // bus index
  int to = 0;             // bus index
  long long from_id = 0;  // original bus id
  long long to_id = 0;
  double susceptance = 0.0;  // 1/x
  double capacity = 0.0;     // per-unit; 0 means unlimited in the case file
};

struct GridModel {
  int n = 0;  // buses
  int m = 0;  // in-service lines
  std::vector<long long> bus_ids;          // index -> id
  std::map<long long, int> bus_index;      // id -> index
  std::vector<Line> lines;
  Vec demand;      // per-unit
  Vec gen_limit;   // per-unit, zero at non-generator buses
  // Cost coefficients expressed against per-unit power, in units of
  // (base_mva * $): with these, marginal prices and duals come out in $/MW.
  Vec cost_c2;
  Vec cost_c1;
  Vec cost_c0;
  Mat shift;       // m x n, reference column identically zero
  int reference_bus = 0;  // bus index
  double base_mva = 100.0;
  std::vector<std::set<int>> substations_of;  // bus index -> substation indices
  std::vector<std::string> substation_ids;    // substation index -> id
  // pre-attack SCED flows, filled lazily by baseline_flows()
  mutable std::shared_ptr<const Vec> baseline_cache;

  double objective_dollars(double internal_objective) const {
    return internal_objective * base_mva;
  }

  int line_index(const LineRef& ref) const {
    for (int e = 0; e < m; ++e)
      if (lines[e].from_id == ref.from && lines[e].to_id == ref.to) return e;
    fail(errc::unknown_line,
         "no in-service line (" + std::to_string(ref.from) + "," + std::to_string(ref.to) + ")");
  }

  std::vector<int> generator_buses() const {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
      if (gen_limit[i] > 0.0) out.push_back(i);
    return out;
  }
};

namespace detail {
inline void check_connected(int n, const std::vector<Line>& lines) {
  if (n == 0) fail(errc::grid_not_connected, "empty grid");
  std::vector<std::vector<int>> adj(n);
  for (const auto& l : lines) {
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  if (count != n) fail(errc::grid_not_connected, "grid not connected");
}
}  // namespace detail

inline GridModel build_grid_model(const ValidatedScenario& scenario) {
  const RawCase& rc = scenario.raw;
  GridModel g;
  g.base_mva = rc.base_mva;
  g.n = static_cast<int>(rc.bus.size());
  g.bus_ids.resize(g.n);
  for (int i = 0; i < g.n; ++i) {
    long long id = static_cast<long long>(rc.bus[i][col::BUS_I]);
    g.bus_ids[i] = id;
    g.bus_index[id] = i;
    if (static_cast<int>(rc.bus[i][col::BUS_TYPE]) == REF_BUS_TYPE) g.reference_bus = i;
  }

  // out-of-service branches are dropped before model build
  for (const auto& row : rc.branch) {
    if (row[col::BR_STATUS] == 0.0) continue;
    Line l;
    l.from_id = static_cast<long long>(row[col::F_BUS]);
    l.to_id = static_cast<long long>(row[col::T_BUS]);
    l.from = g.bus_index.at(l.from_id);
    l.to = g.bus_index.at(l.to_id);
    l.susceptance = 1.0 / row[col::BR_X];
    l.capacity = row[col::RATE_A] / rc.base_mva;
    g.lines.push_back(l);
  }
  g.m = static_cast<int>(g.lines.size());
  detail::check_connected(g.n, g.lines);

  g.demand = Vec::Zero(g.n);
  for (const auto& row : rc.bus) {
    g.demand[g.bus_index.at(static_cast<long long>(row[col::BUS_I]))] +=
        row[col::PD] / rc.base_mva;
  }

  g.gen_limit = Vec::Zero(g.n);
  g.cost_c2 = Vec::Zero(g.n);
  g.cost_c1 = Vec::Zero(g.n);
  g.cost_c0 = Vec::Zero(g.n);
  for (std::size_t k = 0; k < rc.gen.size(); ++k) {
    const auto& row = rc.gen[k];
    if (row[col::GEN_STATUS] == 0.0) continue;
    int i = g.bus_index.at(static_cast<long long>(row[col::GEN_BUS]));
    g.gen_limit[i] += row[col::PMAX] / rc.base_mva;
    const auto& cost = rc.gencost[k];
    // $/MW^2 against per-unit power, rescaled so duals land in $/MW
    g.cost_c2[i] += cost[col::C2] * rc.base_mva;
    g.cost_c1[i] += cost[col::C1];
    g.cost_c0[i] += cost[col::C0] / rc.base_mva;
  }
  if (scenario.config.regularize_cost) {
    for (int i = 0; i < g.n; ++i)
      if (g.gen_limit[i] > 0.0 && g.cost_c2[i] == 0.0) g.cost_c2[i] = 1e-8;
  }

  // Reduced susceptance system: remove the reference bus, solve for the
  // sensitivity of line flows to unit injections withdrawn at the reference.
  int nr = g.n - 1;
  auto reduced = [&](int bus) { return bus < g.reference_bus ? bus : bus - 1; };
  Mat b_red = Mat::Zero(nr, nr);
  for (const auto& l : g.lines) {
    double b = l.susceptance;
    if (l.from != g.reference_bus && l.to != g.reference_bus) {
      int i = reduced(l.from), j = reduced(l.to);
      b_red(i, i) += b;
      b_red(j, j) += b;
      b_red(i, j) -= b;
      b_red(j, i) -= b;
    } else {
      int other = l.from == g.reference_bus ? l.to : l.from;
      b_red(reduced(other), reduced(other)) += b;
    }
  }
  Eigen::PartialPivLU<Mat> lu(b_red);
  // connectivity already guarantees nonsingularity; guard anyway
  {
    Mat l_u = lu.matrixLU();
    double min_piv = 1e300, max_piv = 0.0;
    for (int i = 0; i < nr; ++i) {
      min_piv = std::min(min_piv, std::abs(l_u(i, i)));
      max_piv = std::max(max_piv, std::abs(l_u(i, i)));
    }
    if (nr > 0 && (min_piv == 0.0 || min_piv < 1e-12 * max_piv))
      fail(errc::grid_not_connected, "grid not connected");
  }

  // flow incidence on non-reference buses
  Mat bf = Mat::Zero(g.m, nr);
  for (int e = 0; e < g.m; ++e) {
    const auto& l = g.lines[e];
    if (l.from != g.reference_bus) bf(e, reduced(l.from)) += l.susceptance;
    if (l.to != g.reference_bus) bf(e, reduced(l.to)) -= l.susceptance;
  }
  Mat f_red = lu.solve(bf.transpose()).transpose();  // b_red is symmetric
  g.shift = Mat::Zero(g.m, g.n);
  for (int i = 0; i < g.n; ++i) {
    if (i == g.reference_bus) continue;
    g.shift.col(i) = f_red.col(reduced(i));
  }

  // substation coverage
  g.substations_of.assign(g.n, {});
  for (std::size_t k = 0; k < scenario.map.substations.size(); ++k) {
    const auto& s = scenario.map.substations[k];
    g.substation_ids.push_back(s.id);
    for (long long b : s.buses) g.substations_of[g.bus_index.at(b)].insert(static_cast<int>(k));
  }

  return g;
}

/// DC flows F(p_g - p_d) for a balanced injection.
inline Vec dc_flows(const GridModel& g, const Vec& p_g, const Vec& p_d, double eps = 1e-6) {
  if (p_g.size() != g.n || p_d.size() != g.n)
    fail(errc::precondition, "injection vectors must have one entry per bus");
  Vec p = p_g - p_d;
  if (std::abs(p.sum()) > eps) fail(errc::unbalanced_injection, "unbalanced injection");
  return g.shift * p;
}

inline Vec shift_factor_row(const GridModel& g, int line) {
  if (line < 0 || line >= g.m) fail(errc::unknown_line, "line index out of range");
  return g.shift.row(line).transpose();
}

inline Vec shift_factor_row(const GridModel& g, const LineRef& ref) {
  return shift_factor_row(g, g.line_index(ref));
}

}  // namespace cigrid
