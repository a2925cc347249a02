#include <catch_amalgamated.hpp>
#include <chrono>
#include <random>

#include "cigrid/qp.hpp"
#include "cigrid/sced.hpp"
#include "fixtures.hpp"

using namespace cigrid;

TEST_CASE("qp: equality projection") {
  // min (x-1)^2 + (y-2)^2  s.t.  x + y = 1  ->  (0, 1)
  qp::Problem p;
  p.q = 2.0 * Mat::Identity(2, 2);
  p.c.resize(2);
  p.c << -2.0, -4.0;
  p.a_eq = Mat::Ones(1, 2);
  p.b_eq = Vec::Constant(1, 1.0);
  p.g = Mat(0, 2);
  p.h = Vec(0);
  p.lb = Vec::Constant(2, -lp::kInf);
  p.ub = Vec::Constant(2, lp::kInf);
  auto s = qp::solve(p);
  REQUIRE(s.status == qp::Status::optimal);
  CHECK(s.x[0] == Catch::Approx(0.0).margin(1e-8));
  CHECK(s.x[1] == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("qp: active bound with multiplier") {
  // min x^2 s.t. x >= 1  ->  x = 1, lower dual = 2
  qp::Problem p;
  p.q = 2.0 * Mat::Identity(1, 1);
  p.c = Vec::Zero(1);
  p.a_eq = Mat(0, 1);
  p.b_eq = Vec(0);
  p.g = Mat(0, 1);
  p.h = Vec(0);
  p.lb = Vec::Constant(1, 1.0);
  p.ub = Vec::Constant(1, lp::kInf);
  auto s = qp::solve(p);
  REQUIRE(s.status == qp::Status::optimal);
  CHECK(s.x[0] == Catch::Approx(1.0).margin(1e-9));
  CHECK(s.lower_duals[0] == Catch::Approx(2.0).margin(1e-8));
}

TEST_CASE("qp: infeasible constraints") {
  qp::Problem p;
  p.q = Mat::Identity(1, 1);
  p.c = Vec::Zero(1);
  p.a_eq = Mat(0, 1);
  p.b_eq = Vec(0);
  p.g = Mat(2, 1);
  p.g << 1.0, -1.0;
  p.h = Vec(2);
  p.h << 1.0, -2.0;  // x <= 1 and x >= 2
  p.lb = Vec::Constant(1, -lp::kInf);
  p.ub = Vec::Constant(1, lp::kInf);
  CHECK(qp::solve(p).status == qp::Status::infeasible);
}

TEST_CASE("qp: random problems satisfy KKT") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(rng() % 4);
    qp::Problem p;
    Mat a = Mat::NullaryExpr(n, n, [&]() { return coef(rng); });
    p.q = a.transpose() * a + 0.1 * Mat::Identity(n, n);
    p.c = Vec::NullaryExpr(n, [&]() { return coef(rng); });
    p.a_eq = Mat::Ones(1, n);
    p.b_eq = Vec::Constant(1, 1.0);
    int ni = 1 + static_cast<int>(rng() % 3);
    p.g = Mat::NullaryExpr(ni, n, [&]() { return coef(rng); });
    p.h = Vec::NullaryExpr(ni, [&]() { return std::abs(coef(rng)) + 0.2; });
    p.lb = Vec::Constant(n, -2.0);
    p.ub = Vec::Constant(n, 2.0);
    auto s = qp::solve(p);
    if (s.status != qp::Status::optimal) continue;
    // stationarity with returned multipliers
    Vec grad = p.q * s.x + p.c + p.a_eq.transpose() * s.eq_duals +
               p.g.transpose() * s.ineq_duals - s.lower_duals + s.upper_duals;
    CHECK(grad.lpNorm<Eigen::Infinity>() < 1e-7);
    CHECK(s.ineq_duals.minCoeff() >= 0.0);
    // complementarity
    for (int i = 0; i < ni; ++i)
      CHECK(std::abs(s.ineq_duals[i] * (p.g.row(i).dot(s.x) - p.h[i])) < 1e-7);
  }
}

TEST_CASE("two-bus forced dispatch") {
  GridModel g = build_grid_model(
      fixtures::load_scenario(fixtures::kTwoBusCase, fixtures::kTwoBusMap));
  ScedSolution sol = solve_sced(make_sced_problem(g));
  CHECK(sol.p_g[0] == Catch::Approx(1.0).margin(1e-8));
  CHECK(sol.p_g[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(sol.flows[0] == Catch::Approx(1.0).margin(1e-8));
  // nothing binds: marginal price 2 c2 P + c1 = 2*0.02*100 + 1 = 5 $/MW
  CHECK(sol.nu == Catch::Approx(5.0).margin(1e-6));
  // non-binding rows carry zero duals; the pinned non-generator bus (both
  // bounds at zero) absorbs the price: lambda_hi = nu
  CHECK(sol.lambda[0] == Catch::Approx(0.0).margin(1e-8));      // gen lower
  CHECK(sol.lambda[g.n] == Catch::Approx(0.0).margin(1e-8));    // gen upper
  CHECK(sol.lambda[2 * g.n] == Catch::Approx(0.0).margin(1e-8));
  CHECK(sol.lambda[2 * g.n + g.m] == Catch::Approx(0.0).margin(1e-8));
  CHECK(sol.lambda[g.n + 1] == Catch::Approx(5.0).margin(1e-6));
  // objective: 0.02*100^2 + 1*100 = 300 $
  CHECK(sol.objective == Catch::Approx(300.0).margin(1e-4));
}

TEST_CASE("kkt_residuals") {
  GridModel g = build_grid_model(
      fixtures::load_scenario(fixtures::kTwoBusCase, fixtures::kTwoBusMap));
  ScedProblem prob = make_sced_problem(g);
  ScedSolution sol = solve_sced(prob);

  SECTION("returned solution is within tolerance") {
    auto res = kkt_residuals(prob, sol);
    CHECK(res.stationarity <= 1e-6);
    CHECK(res.feasibility <= 1e-6);
    CHECK(res.complementarity <= 1e-6);
  }
  SECTION("balance perturbation shows up exactly") {
    sol.p_g[1] += 0.1;  // non-generator bus: only the balance row moves
    auto res = kkt_residuals(prob, sol);
    CHECK(res.stationarity == Catch::Approx(0.1).margin(1e-9));
  }
  SECTION("hand-built KKT point is exact") {
    ScedSolution hand;
    hand.p_g = Vec::Zero(2);
    hand.p_g[0] = 1.0;
    hand.nu = 5.0;
    hand.lambda = Vec::Zero(2 * (g.n + g.m));
    hand.lambda[g.n + 1] = 5.0;  // pinned non-generator bus pays the price
    hand.flows = g.shift * (hand.p_g - g.demand);
    auto res = kkt_residuals(prob, hand);
    CHECK(res.stationarity == 0.0);
    CHECK(res.feasibility <= 0.0);
    CHECK(res.complementarity == 0.0);
  }
}

TEST_CASE("case39 baseline dispatch") {
  GridModel g = build_grid_model(fixtures::case39_scenario());
  auto t0 = std::chrono::steady_clock::now();
  ScedProblem prob = make_sced_problem(g);
  ScedSolution sol = solve_sced(prob);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 5.0);
  auto res = kkt_residuals(prob, sol);
  CHECK(res.stationarity <= 1e-6);
  CHECK(res.feasibility <= 1e-6);
  CHECK(res.complementarity <= 1e-6);
  CHECK(sol.lambda.minCoeff() >= 0.0);
  CHECK(sol.p_g.sum() == Catch::Approx(g.demand.sum()).margin(1e-8));
  // flows from the solution agree with dc_flows on the same injection
  Vec f = dc_flows(g, sol.p_g, g.demand);
  CHECK((f - sol.flows).lpNorm<Eigen::Infinity>() < 1e-10);
}

namespace {

std::string congested_triangle() {
  std::string text = fixtures::kTriangleCase;
  auto pos = text.find("3 1 0 0.1 0 400");
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, 15, "3 1 0 0.1 0  50");
}

// cost in dollars straight from the MATPOWER coefficients
double dollars(const GridModel& g, const Vec& p_g) {
  double base = g.base_mva;
  double c = 0.0;
  for (int i = 0; i < g.n; ++i) {
    double mw = p_g[i] * base;
    c += (g.cost_c2[i] / base) * mw * mw + g.cost_c1[i] * mw + g.cost_c0[i] * base;
  }
  return c;
}

}  // namespace

TEST_CASE("congested triangle matches grid search") {
  GridModel g =
      build_grid_model(fixtures::load_scenario(congested_triangle(), fixtures::kTriangleMap));
  ScedSolution sol = solve_sced(make_sced_problem(g));
  // line (3,1) limited to 0.5 per-unit: the cheap unit at bus 1 is curtailed
  CHECK(std::abs(sol.flows[2]) <= 0.5 + 1e-8);

  // exhaustive 1e-3 grid over the single degree of freedom
  double d = g.demand.sum();
  double best = 1e300, best_y1 = 0.0;
  for (double y1 = 0.0; y1 <= std::min(g.gen_limit[0], d) + 1e-12; y1 += 1e-3) {
    Vec p = Vec::Zero(3);
    p[0] = y1;
    p[1] = d - y1;
    if (p[1] < -1e-12 || p[1] > g.gen_limit[1]) continue;
    Vec f = g.shift * (p - g.demand);
    bool ok = true;
    for (int e = 0; e < g.m; ++e)
      if (std::abs(f[e]) > line_cap(g, e) + 1e-9) ok = false;
    if (!ok) continue;
    double c = dollars(g, p);
    if (c < best) {
      best = c;
      best_y1 = y1;
    }
  }
  CHECK(std::abs(sol.p_g[0] - best_y1) < 2e-3);
  CHECK(sol.objective <= best + 1e-6);
}

TEST_CASE("random 3-bus instances never beat the grid-search lower envelope") {
  std::mt19937 rng(59);
  std::uniform_real_distribution<double> load(0.4, 1.6);
  std::uniform_real_distribution<double> cap(0.4, 1.0);
  int tested = 0;
  for (int trial = 0; trial < 40 && tested < 20; ++trial) {
    std::string text = fixtures::kTriangleCase;
    auto pos = text.find("3 1 100");
    text.replace(pos, 7, "3 1 " + std::to_string(static_cast<int>(load(rng) * 100)));
    pos = text.find("3 1 0 0.1 0 400");
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%3d", static_cast<int>(cap(rng) * 100));
    text.replace(pos + 12, 3, buf);
    GridModel g = build_grid_model(fixtures::load_scenario(text, fixtures::kTriangleMap));
    ScedSolution sol;
    try {
      sol = solve_sced(make_sced_problem(g));
    } catch (const error& e) {
      REQUIRE(e.code() == errc::sced_infeasible);
      continue;
    }
    ++tested;
    double d = g.demand.sum();
    for (double y1 = 0.0; y1 <= std::min(g.gen_limit[0], d) + 1e-12; y1 += 1e-3) {
      Vec p = Vec::Zero(3);
      p[0] = y1;
      p[1] = d - y1;
      if (p[1] < 0.0 || p[1] > g.gen_limit[1]) continue;
      Vec f = g.shift * (p - g.demand);
      bool ok = true;
      for (int e = 0; e < g.m; ++e)
        if (std::abs(f[e]) > line_cap(g, e)) ok = false;
      if (!ok) continue;
      CHECK(sol.objective <= dollars(g, p) + 1e-6);
    }
  }
  CHECK(tested >= 15);
}

TEST_CASE("uniqueness across starting points") {
  GridModel g = build_grid_model(fixtures::case39_scenario());
  ScedProblem prob = make_sced_problem(g);
  ScedSolution a = solve_sced(prob);
  Vec bias = Vec::Zero(g.n);
  for (int i = 0; i < g.n; ++i) bias[i] = (i % 2 == 0) ? 1.0 : -1.0;
  ScedSolution b = solve_sced(prob, {}, bias);
  CHECK((a.p_g - b.p_g).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("baseline flows") {
  SECTION("two-bus line carries the whole load") {
    GridModel g = build_grid_model(
        fixtures::load_scenario(fixtures::kTwoBusCase, fixtures::kTwoBusMap));
    bool degenerate = true;
    CHECK(baseline_flow(g, LineRef{1, 2}, &degenerate) == Catch::Approx(1.0).margin(1e-8));
    CHECK_FALSE(degenerate);
    // cached: second call hits the stored vector
    CHECK(g.baseline_cache != nullptr);
    CHECK(baseline_flow(g, 0) == Catch::Approx(1.0).margin(1e-8));
  }
  SECTION("zero demand is degenerate") {
    std::string text = fixtures::kTwoBusCase;
    auto pos = text.find("2 1 100");
    text.replace(pos, 7, "2 1 0  ");
    GridModel g = build_grid_model(fixtures::load_scenario(text, fixtures::kTwoBusMap));
    bool degenerate = false;
    CHECK(baseline_flow(g, 0, &degenerate) == Catch::Approx(0.0).margin(1e-12));
    CHECK(degenerate);
  }
  SECTION("case39 goal line (2,25) is consistent with dc_flows") {
    GridModel g = build_grid_model(fixtures::case39_scenario());
    ScedSolution sol = solve_sced(make_sced_problem(g));
    Vec f = dc_flows(g, sol.p_g, g.demand);
    CHECK(baseline_flow(g, LineRef{2, 25}) ==
          Catch::Approx(f[g.line_index(LineRef{2, 25})]).margin(1e-8));
  }
}

TEST_CASE("sced error conditions") {
  SECTION("demand beyond capacity") {
    std::string text = fixtures::kTwoBusCase;
    auto pos = text.find("2 1 100");
    text.replace(pos, 7, "2 1 600");
    GridModel g = build_grid_model(fixtures::load_scenario(text, fixtures::kTwoBusMap));
    try {
      solve_sced(make_sced_problem(g));
      FAIL();
    } catch (const error& e) {
      CHECK(e.code() == errc::sced_infeasible);
    }
  }
  SECTION("zero c2 rejected unless regularized") {
    std::string text = fixtures::kTwoBusCase;
    auto pos = text.find("2 0 0 3 0.02");
    text.replace(pos + 8, 4, "0.00");
    GridModel g = build_grid_model(fixtures::load_scenario(text, fixtures::kTwoBusMap));
    try {
      solve_sced(make_sced_problem(g));
      FAIL();
    } catch (const error& e) {
      CHECK(e.code() == errc::nonconvex_cost);
    }
    GridModel reg = build_grid_model(
        fixtures::load_scenario(text, fixtures::kTwoBusMap, R"({"regularize_cost": true})"));
    ScedSolution sol = solve_sced(make_sced_problem(reg));
    CHECK(sol.p_g[0] == Catch::Approx(1.0).margin(1e-6));
  }
}
