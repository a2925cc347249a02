#include <catch_amalgamated.hpp>
#include <random>

#include "cigrid/lp.hpp"

using namespace cigrid;
using lp::kInf;

namespace {

lp::Problem make(int n, std::vector<double> c, std::vector<double> lb, std::vector<double> ub) {
  lp::Problem p;
  p.num_vars = n;
  p.c = Eigen::Map<Eigen::VectorXd>(c.data(), n);
  p.lb = Eigen::Map<Eigen::VectorXd>(lb.data(), n);
  p.ub = Eigen::Map<Eigen::VectorXd>(ub.data(), n);
  return p;
}

// Certify optimality from first principles: primal feasibility, dual sign
// conditions, and complementary slackness. Independent of solver internals.
void certify_optimal(const lp::Problem& p, const lp::Solution& s, double tol = 1e-6) {
  REQUIRE(s.status == lp::Status::optimal);
  const auto& x = s.x;
  for (int j = 0; j < p.num_vars; ++j) {
    CHECK(x[j] >= p.lb[j] - tol);
    CHECK(x[j] <= p.ub[j] + tol);
  }
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    double a = 0.0;
    for (auto [j, v] : p.rows[i].coeffs) a += v * x[j];
    CHECK(a >= p.rows[i].lb - tol);
    CHECK(a <= p.rows[i].ub + tol);
    // y_i > 0 only if the row lower bound binds, y_i < 0 only if the upper binds
    double y = s.row_duals[i];
    if (y > tol) CHECK(a <= p.rows[i].lb + tol);
    if (y < -tol) CHECK(a >= p.rows[i].ub - tol);
  }
  for (int j = 0; j < p.num_vars; ++j) {
    double d = s.reduced_costs[j];
    // d > 0 only at the lower bound, d < 0 only at the upper bound
    if (d > tol) CHECK(x[j] <= p.lb[j] + tol);
    if (d < -tol) CHECK(x[j] >= p.ub[j] - tol);
  }
  CHECK(s.objective == Catch::Approx(p.c.dot(x)).margin(1e-9));
}

}  // namespace

TEST_CASE("single variable box maximization") {
  // max x s.t. x <= 3, 0 <= x <= 1  (as min -x)
  auto p = make(1, {-1.0}, {0.0}, {1.0});
  p.rows.push_back({{{0, 1.0}}, -kInf, 3.0});
  lp::Solution s = lp::solve(p);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.x[0] == Catch::Approx(1.0).margin(1e-9));
  CHECK(s.objective == Catch::Approx(-1.0).margin(1e-9));
}

TEST_CASE("infeasible pair of rows") {
  auto p = make(1, {0.0}, {-kInf}, {kInf});
  p.rows.push_back({{{0, 1.0}}, 2.0, kInf});   // x >= 2
  p.rows.push_back({{{0, 1.0}}, -kInf, 1.0});  // x <= 1
  lp::Solution s = lp::solve(p);
  CHECK(s.status == lp::Status::infeasible);
}

TEST_CASE("hand-solved vertex") {
  // min x + y  s.t.  x + 2y >= 2,  2x + y >= 2,  x, y >= 0  ->  (2/3, 2/3)
  auto p = make(2, {1.0, 1.0}, {0.0, 0.0}, {kInf, kInf});
  p.rows.push_back({{{0, 1.0}, {1, 2.0}}, 2.0, kInf});
  p.rows.push_back({{{0, 2.0}, {1, 1.0}}, 2.0, kInf});
  lp::Solution s = lp::solve(p);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.x[0] == Catch::Approx(2.0 / 3.0).margin(1e-9));
  CHECK(s.x[1] == Catch::Approx(2.0 / 3.0).margin(1e-9));
  CHECK(s.objective == Catch::Approx(4.0 / 3.0).margin(1e-9));
  certify_optimal(p, s);
}

TEST_CASE("unbounded detection") {
  auto p = make(1, {-1.0}, {0.0}, {kInf});  // max x, x >= 0 only
  lp::Solution s = lp::solve(p);
  CHECK(s.status == lp::Status::unbounded);
}

TEST_CASE("equality and range rows") {
  // min 3x + y  s.t.  x + y = 4,  1 <= x - y <= 2,  x, y free
  auto p = make(2, {3.0, 1.0}, {-kInf, -kInf}, {kInf, kInf});
  p.rows.push_back({{{0, 1.0}, {1, 1.0}}, 4.0, 4.0});
  p.rows.push_back({{{0, 1.0}, {1, -1.0}}, 1.0, 2.0});
  lp::Solution s = lp::solve(p);
  REQUIRE(s.status == lp::Status::optimal);
  // pushing x down hits x - y >= 1: x = 2.5, y = 1.5
  CHECK(s.x[0] == Catch::Approx(2.5).margin(1e-9));
  CHECK(s.x[1] == Catch::Approx(1.5).margin(1e-9));
  certify_optimal(p, s);
}

TEST_CASE("free variable with equality") {
  // min x  s.t.  x + y = 1,  -2 <= y <= 2, x free  ->  x = -1, y = 2
  auto p = make(2, {1.0, 0.0}, {-kInf, -2.0}, {kInf, 2.0});
  p.rows.push_back({{{0, 1.0}, {1, 1.0}}, 1.0, 1.0});
  lp::Solution s = lp::solve(p);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.x[0] == Catch::Approx(-1.0).margin(1e-9));
  CHECK(s.x[1] == Catch::Approx(2.0).margin(1e-9));
}

TEST_CASE("degenerate vertex terminates") {
  // three rows through the same point (0,0); optimum at the origin
  auto p = make(2, {1.0, 1.0}, {-kInf, -kInf}, {kInf, kInf});
  p.rows.push_back({{{0, 1.0}, {1, 1.0}}, 0.0, kInf});
  p.rows.push_back({{{0, 1.0}, {1, 2.0}}, 0.0, kInf});
  p.rows.push_back({{{0, 2.0}, {1, 1.0}}, 0.0, kInf});
  lp::Solution s = lp::solve(p);
  REQUIRE(s.status == lp::Status::optimal);
  CHECK(s.objective == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("warm start resolves after a bound change") {
  auto p = make(2, {-1.0, -2.0}, {0.0, 0.0}, {4.0, 4.0});
  p.rows.push_back({{{0, 1.0}, {1, 1.0}}, -kInf, 5.0});
  lp::Solution s1 = lp::solve(p);
  REQUIRE(s1.status == lp::Status::optimal);
  CHECK(s1.objective == Catch::Approx(-9.0).margin(1e-9));  // (1,4)

  p.ub[1] = 2.0;  // branch-like tightening
  lp::Solution s2 = lp::solve(p, {}, &s1.basis);
  REQUIRE(s2.status == lp::Status::optimal);
  CHECK(s2.objective == Catch::Approx(-7.0).margin(1e-9));  // (3,2)
  certify_optimal(p, s2);
}

TEST_CASE("randomized LPs against vertex enumeration") {
  // n = 2, box plus <= rows: enumerate all candidate vertices from pairs of
  // active hyperplanes and compare objectives.
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_real_distribution<double> rhs_d(0.5, 3.0);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto p = make(2, {coef(rng), coef(rng)}, {0.0, 0.0}, {2.0, 2.0});
    int nrows = 2 + static_cast<int>(rng() % 3);
    for (int i = 0; i < nrows; ++i)
      p.rows.push_back({{{0, coef(rng)}, {1, coef(rng)}}, -kInf, rhs_d(rng)});

    // hyperplanes: rows at rhs, bounds at lb/ub
    struct Plane {
      double a0, a1, b;
    };
    std::vector<Plane> planes;
    for (const auto& r : p.rows) planes.push_back({r.coeffs[0].second, r.coeffs[1].second, r.ub});
    planes.push_back({1, 0, 0});
    planes.push_back({1, 0, 2});
    planes.push_back({0, 1, 0});
    planes.push_back({0, 1, 2});

    auto feasible = [&](double x0, double x1) {
      if (x0 < -1e-9 || x0 > 2 + 1e-9 || x1 < -1e-9 || x1 > 2 + 1e-9) return false;
      for (const auto& r : p.rows)
        if (r.coeffs[0].second * x0 + r.coeffs[1].second * x1 > r.ub + 1e-9) return false;
      return true;
    };
    double best = kInf;
    for (std::size_t i = 0; i < planes.size(); ++i)
      for (std::size_t j = i + 1; j < planes.size(); ++j) {
        double det = planes[i].a0 * planes[j].a1 - planes[i].a1 * planes[j].a0;
        if (std::abs(det) < 1e-9) continue;
        double x0 = (planes[i].b * planes[j].a1 - planes[i].a1 * planes[j].b) / det;
        double x1 = (planes[i].a0 * planes[j].b - planes[i].b * planes[j].a0) / det;
        if (feasible(x0, x1)) best = std::min(best, p.c[0] * x0 + p.c[1] * x1);
      }

    lp::Solution s = lp::solve(p);
    if (!std::isfinite(best)) {
      CHECK(s.status == lp::Status::infeasible);
      continue;
    }
    REQUIRE(s.status == lp::Status::optimal);
    CHECK(s.objective == Catch::Approx(best).margin(1e-6));
    certify_optimal(p, s);
    ++solved;
  }
  CHECK(solved > 100);  // most random instances should be feasible
}

TEST_CASE("randomized larger LPs carry an optimality certificate") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 4 + static_cast<int>(rng() % 5);
    lp::Problem p;
    p.num_vars = n;
    p.c.resize(n);
    p.lb = Eigen::VectorXd::Constant(n, -1.0);
    p.ub = Eigen::VectorXd::Constant(n, 3.0);
    for (int j = 0; j < n; ++j) p.c[j] = coef(rng);
    int nrows = 2 + static_cast<int>(rng() % n);
    for (int i = 0; i < nrows; ++i) {
      lp::Row r;
      for (int j = 0; j < n; ++j) r.coeffs.emplace_back(j, coef(rng));
      double kind = coef(rng);
      if (kind < -0.3) {
        r.lb = r.ub = coef(rng);  // equality through a feasible-ish point
      } else if (kind < 0.3) {
        r.lb = -2.0;
        r.ub = 2.0;
      } else {
        r.ub = 1.5;
      }
      p.rows.push_back(std::move(r));
    }
    lp::Solution s = lp::solve(p);
    if (s.status == lp::Status::optimal) certify_optimal(p, s);
    // box-bounded, so unboundedness is impossible
    CHECK(s.status != lp::Status::unbounded);
    CHECK(s.status != lp::Status::numerical_failure);
    CHECK(s.status != lp::Status::iteration_limit);
  }
}

TEST_CASE("model validation") {
  auto p = make(1, {1.0}, {0.0}, {1.0});
  p.rows.push_back({{{3, 1.0}}, 0.0, 1.0});
  try {
    lp::solve(p);
    FAIL();
  } catch (const error& e) {
    CHECK(e.code() == errc::bad_model);
  }
}
