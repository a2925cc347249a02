#include <catch_amalgamated.hpp>
#include <random>

#include "cigrid/milp.hpp"

using namespace cigrid;

TEST_CASE("binary relaxation vs integral solve") {
  // max x  s.t.  x <= 3, x binary: relaxation and MILP both give x = 1
  MilpModel m;
  int x = m.add_variable("x", VarKind::binary, 0.0, 1.0);
  m.add_constraint("cap", {{x, 1.0}}, Relation::le, 3.0);
  m.set_objective(true, {{x, 1.0}});
  auto relax = solve_lp_relaxation(m);
  REQUIRE(relax.status == MilpStatus::optimal);
  CHECK(relax.objective_value == Catch::Approx(1.0).margin(1e-9));
  auto sol = solve_milp(m);
  REQUIRE(sol.status == MilpStatus::optimal);
  CHECK(sol.value(m, "x") == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("fractional relaxation rounds down through branching") {
  // max x1 + x2  s.t.  x1 + x2 <= 1.5, binaries: LP gives 1.5, MILP gives 1
  MilpModel m;
  int a = m.add_variable("a", VarKind::binary, 0.0, 1.0);
  int b = m.add_variable("b", VarKind::binary, 0.0, 1.0);
  m.add_constraint("cap", {{a, 1.0}, {b, 1.0}}, Relation::le, 1.5);
  m.set_objective(true, {{a, 1.0}, {b, 1.0}});
  auto relax = solve_lp_relaxation(m);
  CHECK(relax.objective_value == Catch::Approx(1.5).margin(1e-9));
  auto sol = solve_milp(m);
  REQUIRE(sol.status == MilpStatus::optimal);
  CHECK(sol.objective_value == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("knapsack against exhaustive enumeration") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> weight(1.0, 10.0);
  std::uniform_real_distribution<double> value(1.0, 10.0);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 6 + static_cast<int>(rng() % 7);
    std::vector<double> w(n), v(n);
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      w[j] = weight(rng);
      v[j] = value(rng);
      total += w[j];
    }
    double cap = 0.4 * total;

    MilpModel m;
    std::vector<std::pair<int, double>> cap_row, obj;
    for (int j = 0; j < n; ++j) {
      int var = m.add_variable("x" + std::to_string(j), VarKind::binary, 0.0, 1.0);
      cap_row.emplace_back(var, w[j]);
      obj.emplace_back(var, v[j]);
    }
    m.add_constraint("cap", cap_row, Relation::le, cap);
    m.set_objective(true, obj);
    auto sol = solve_milp(m);
    REQUIRE(sol.status == MilpStatus::optimal);

    double best = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      double ws = 0.0, vs = 0.0;
      for (int j = 0; j < n; ++j)
        if (mask & (1u << j)) {
          ws += w[j];
          vs += v[j];
        }
      if (ws <= cap) best = std::max(best, vs);
    }
    CHECK(sol.objective_value == Catch::Approx(best).margin(1e-6));
  }
}

TEST_CASE("mixed problems against exhaustive binary enumeration") {
  // fix each binary pattern, solve the continuous remainder as an LP, compare
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    int nb = 3 + static_cast<int>(rng() % 4);
    int nc = 2;
    MilpModel m;
    for (int j = 0; j < nb; ++j)
      m.add_variable("b" + std::to_string(j), VarKind::binary, 0.0, 1.0);
    for (int j = 0; j < nc; ++j)
      m.add_variable("y" + std::to_string(j), VarKind::continuous, 0.0, 2.0);
    int nv = nb + nc;
    std::vector<double> c(nv);
    std::vector<std::pair<int, double>> obj;
    for (int j = 0; j < nv; ++j) {
      c[j] = coef(rng);
      obj.emplace_back(j, c[j]);
    }
    int nrows = 2 + static_cast<int>(rng() % 3);
    std::vector<std::vector<double>> rows(nrows, std::vector<double>(nv));
    std::vector<double> rhs(nrows);
    for (int i = 0; i < nrows; ++i) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < nv; ++j) {
        rows[i][j] = coef(rng);
        row.emplace_back(j, rows[i][j]);
      }
      rhs[i] = std::abs(coef(rng)) + 0.5;
      m.add_constraint("r" + std::to_string(i), row, Relation::le, rhs[i]);
    }
    m.set_objective(false, obj);
    auto sol = solve_milp(m);

    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << nb); ++mask) {
      lp::Problem p;
      p.num_vars = nv;
      p.c = Eigen::Map<Eigen::VectorXd>(c.data(), nv);
      p.lb = Eigen::VectorXd::Zero(nv);
      p.ub = Eigen::VectorXd::Constant(nv, 2.0);
      for (int j = 0; j < nb; ++j) {
        double v = (mask & (1u << j)) ? 1.0 : 0.0;
        p.lb[j] = p.ub[j] = v;
      }
      for (int j = nb; j < nv; ++j) p.ub[j] = 2.0;
      for (int i = 0; i < nrows; ++i) {
        lp::Row r;
        for (int j = 0; j < nv; ++j) r.coeffs.emplace_back(j, rows[i][j]);
        r.ub = rhs[i];
        p.rows.push_back(std::move(r));
      }
      lp::Solution s = lp::solve(p);
      if (s.status == lp::Status::optimal) best = std::min(best, s.objective);
    }
    if (!std::isfinite(best)) {
      CHECK(sol.status == MilpStatus::infeasible);
    } else {
      REQUIRE(sol.status == MilpStatus::optimal);
      CHECK(sol.objective_value == Catch::Approx(best).margin(1e-6));
    }
  }
}

TEST_CASE("integer infeasibility despite a feasible relaxation") {
  // 0.4 <= x <= 0.6 has fractional solutions only
  MilpModel m;
  int x = m.add_variable("x", VarKind::binary, 0.0, 1.0);
  m.add_constraint("lo", {{x, 1.0}}, Relation::ge, 0.4);
  m.add_constraint("hi", {{x, 1.0}}, Relation::le, 0.6);
  m.set_objective(false, {{x, 1.0}});
  CHECK(solve_lp_relaxation(m).status == MilpStatus::optimal);
  CHECK(solve_milp(m).status == MilpStatus::infeasible);
}

TEST_CASE("zero-cost gate binaries are repaired, not branched") {
  // indicator-style model: y <= 5 g, minimize cost of y with a demand row;
  // g is free to round up without branching
  MilpModel m;
  int y = m.add_variable("y", VarKind::continuous, 0.0, 5.0);
  int g = m.add_variable("g", VarKind::binary, 0.0, 1.0);
  m.add_constraint("gate", {{y, 1.0}, {g, -5.0}}, Relation::le, 0.0);
  m.add_constraint("demand", {{y, 1.0}}, Relation::ge, 2.0);
  m.set_objective(false, {{y, 1.0}});
  auto sol = solve_milp(m);
  REQUIRE(sol.status == MilpStatus::optimal);
  CHECK(sol.value(m, "y") == Catch::Approx(2.0).margin(1e-9));
  CHECK(sol.value(m, "g") == Catch::Approx(1.0).margin(1e-9));
  CHECK(sol.node_count == 1);
}

TEST_CASE("node cap reports a limit status") {
  // hard subset-sum style instance so the cap of 1 node trips
  MilpModel m;
  std::vector<std::pair<int, double>> row, obj;
  for (int j = 0; j < 12; ++j) {
    int v = m.add_variable("x" + std::to_string(j), VarKind::binary, 0.0, 1.0);
    row.emplace_back(v, 1.0 + 0.01 * j);
    obj.emplace_back(v, 1.0);
  }
  m.add_constraint("cap", row, Relation::le, 6.005);
  m.set_objective(true, obj);
  MilpLimits limits;
  limits.node_cap = 1;
  auto sol = solve_milp(m, limits);
  CHECK(sol.status == MilpStatus::limit);
}

TEST_CASE("determinism") {
  MilpModel m;
  std::vector<std::pair<int, double>> row, obj;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> coef(1.0, 3.0);
  for (int j = 0; j < 10; ++j) {
    int v = m.add_variable("x" + std::to_string(j), VarKind::binary, 0.0, 1.0);
    row.emplace_back(v, coef(rng));
    obj.emplace_back(v, coef(rng));
  }
  m.add_constraint("cap", row, Relation::le, 8.0);
  m.set_objective(true, obj);
  auto s1 = solve_milp(m);
  auto s2 = solve_milp(m);
  REQUIRE(s1.status == MilpStatus::optimal);
  CHECK(s1.objective_value == s2.objective_value);
  CHECK((s1.values - s2.values).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(s1.node_count == s2.node_count);
}

TEST_CASE("model validation errors") {
  MilpModel m;
  m.add_variable("x", VarKind::continuous, 0.0, 1.0);
  try {
    m.add_constraint("bad", {{4, 1.0}}, Relation::le, 0.0);
    FAIL();
  } catch (const error& e) {
    CHECK(e.code() == errc::bad_model);
  }
  try {
    m.add_variable("b", VarKind::binary, -1.0, 1.0);
    FAIL();
  } catch (const error& e) {
    CHECK(e.code() == errc::bad_model);
  }
}

TEST_CASE("lp format dump is stable") {
  MilpModel m;
  int x = m.add_variable("x", VarKind::binary, 0.0, 1.0);
  int y = m.add_variable("y", VarKind::continuous, 0.0, 2.0);
  m.add_constraint("c1", {{x, 1.0}, {y, -2.0}}, Relation::le, 0.0);
  m.set_objective(false, {{y, 1.0}});
  std::string dump = dump_lp_format(m);
  CHECK(dump.find("Minimize") != std::string::npos);
  CHECK(dump.find("c1:") != std::string::npos);
  CHECK(dump.find("Binaries") != std::string::npos);
  CHECK(dump == dump_lp_format(m));
}
