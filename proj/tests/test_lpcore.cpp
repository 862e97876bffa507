#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ccmkt/errors.hpp"
#include "ccmkt/lpcore.hpp"

using namespace ccmkt;
using namespace ccmkt::lp;

namespace {

// Brute-force LP oracle: enumerates every candidate vertex obtained by
// activating n constraints out of {rows at equality} u {x_j = 0} and keeps
// the best feasible one. Only valid for all-nonnegative columns.
struct VertexOracle {
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> argmin;

  static bool solve_square(std::vector<std::vector<double>> a, std::vector<double> b,
                           std::vector<double>& x) {
    const int n = static_cast<int>(b.size());
    x.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      int piv = -1;
      double best = 1e-10;
      for (int i = k; i < n; ++i)
        if (std::abs(a[i][k]) > best) {
          best = std::abs(a[i][k]);
          piv = i;
        }
      if (piv < 0) return false;
      std::swap(a[k], a[piv]);
      std::swap(b[k], b[piv]);
      for (int i = k + 1; i < n; ++i) {
        double f = a[i][k] / a[k][k];
        if (f == 0.0) continue;
        for (int j = k; j < n; ++j) a[i][j] -= f * a[k][j];
        b[i] -= f * b[k];
      }
    }
    for (int k = n - 1; k >= 0; --k) {
      double acc = b[k];
      for (int j = k + 1; j < n; ++j) acc -= a[k][j] * x[j];
      x[k] = acc / a[k][k];
    }
    return true;
  }

  void run(const LpProblem& p) {
    const int n = p.num_cols();
    const int m = p.num_rows();
    const int total = n + m;
    std::vector<int> pick(n);
    std::vector<std::vector<double>> dense(m, std::vector<double>(n, 0.0));
    for (int i = 0; i < m; ++i)
      for (auto [j, v] : p.rows[i].coeffs) dense[i][j] = v;

    std::vector<int> idx(total);
    for (int i = 0; i < total; ++i) idx[i] = i;
    std::vector<int> comb(n);
    // iterate over all n-subsets of idx
    std::function<void(int, int)> rec = [&](int start, int k) {
      if (k == n) {
        std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
        std::vector<double> b(n, 0.0);
        for (int r = 0; r < n; ++r) {
          int c = comb[r];
          if (c < n) {
            a[r][c] = 1.0;  // x_c = 0
            b[r] = 0.0;
          } else {
            a[r] = dense[c - n];
            b[r] = p.rows[c - n].rhs;
          }
        }
        std::vector<double> x;
        if (!solve_square(a, b, x)) return;
        for (int j = 0; j < n; ++j)
          if (x[j] < -1e-7) return;
        for (int i = 0; i < m; ++i) {
          double acc = 0;
          for (int j = 0; j < n; ++j) acc += dense[i][j] * x[j];
          if (p.rows[i].sense == RowSense::Equal) {
            if (std::abs(acc - p.rows[i].rhs) > 1e-7) return;
          } else if (acc < p.rows[i].rhs - 1e-7) {
            return;
          }
        }
        double obj = p.cost_constant;
        for (int j = 0; j < n; ++j) obj += p.cost[j] * x[j];
        if (obj < best) {
          best = obj;
          argmin = x;
        }
        return;
      }
      for (int i = start; i <= total - (n - k); ++i) {
        comb[k] = i;
        rec(i + 1, k + 1);
      }
    };
    if (n > 0) rec(0, 0);
  }
};

}  // namespace

TEST_CASE("one-variable lp with binding row and unit dual") {
  LpProblem p;
  int x = p.add_column("x", 1.0);
  p.add_row("floor", RowSense::GreaterEqual, 3.0, {{x, 1.0}});
  auto sol = solve_lp(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal[x] == doctest::Approx(3.0));
  CHECK(sol.dual[0] == doctest::Approx(1.0));
  CHECK(sol.objective == doctest::Approx(3.0));
  auto kkt = check_kkt(p, sol);
  CHECK(kkt.duality_gap == doctest::Approx(0.0));
  CHECK(kkt.pass(1e-9));
}

TEST_CASE("free column without counterweight is unbounded") {
  LpProblem p;
  p.add_column("x", -1.0, VarBound::Free);
  p.add_row("noop", RowSense::GreaterEqual, -100.0, {{0, 0.0}});
  auto sol = solve_lp(p);
  CHECK(sol.status == SolveStatus::Unbounded);
}

TEST_CASE("infeasible system reports farkas certificate") {
  LpProblem p;
  int x = p.add_column("x", 1.0);
  p.add_row("lo", RowSense::GreaterEqual, 5.0, {{x, 1.0}});
  p.add_row("hi", RowSense::GreaterEqual, -3.0, {{x, -1.0}});  // x <= 3
  auto sol = solve_lp(p);
  REQUIRE(sol.status == SolveStatus::Infeasible);
  REQUIRE(sol.farkas.size() == 2);
  // y'A <= 0 columnwise and y'b > 0
  double col = sol.farkas[0] * 1.0 + sol.farkas[1] * -1.0;
  double rhs = sol.farkas[0] * 5.0 + sol.farkas[1] * -3.0;
  CHECK(col <= 1e-9);
  CHECK(rhs > 1e-9);
}

TEST_CASE("equality rows and free variables") {
  // min x + y  s.t.  x - y = 2, x + y >= 4, y free
  LpProblem p;
  int x = p.add_column("x", 1.0);
  int y = p.add_column("y", 1.0, VarBound::Free);
  p.add_row("diff", RowSense::Equal, 2.0, {{x, 1.0}, {y, -1.0}});
  p.add_row("sum", RowSense::GreaterEqual, 4.0, {{x, 1.0}, {y, 1.0}});
  auto sol = solve_lp(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal[x] == doctest::Approx(3.0));
  CHECK(sol.primal[y] == doctest::Approx(1.0));
  CHECK(check_kkt(p, sol).pass(1e-8));
}

TEST_CASE("degenerate lp still yields complementary pair") {
  // three rows meet at the same point
  LpProblem p;
  int x = p.add_column("x", 2.0);
  int y = p.add_column("y", 3.0);
  p.add_row("r1", RowSense::GreaterEqual, 2.0, {{x, 1.0}, {y, 1.0}});
  p.add_row("r2", RowSense::GreaterEqual, 4.0, {{x, 2.0}, {y, 2.0}});
  p.add_row("r3", RowSense::GreaterEqual, 2.0, {{x, 1.0}, {y, 1.0}});
  auto sol = solve_lp(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(4.0));
  CHECK(check_kkt(p, sol).pass(1e-8));
}

TEST_CASE("random small lps match the vertex-enumeration oracle") {
  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<double> coeff(-3.0, 3.0);
  std::uniform_int_distribution<int> nd(2, 5), md(1, 4);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = nd(rng), m = md(rng);
    LpProblem p;
    for (int j = 0; j < n; ++j)
      p.add_column("x" + std::to_string(j), std::round(coeff(rng) * 8) / 8.0);
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n; ++j) {
        double v = std::round(coeff(rng) * 8) / 8.0;
        if (v != 0.0) row.push_back({j, v});
      }
      double rhs = -std::abs(std::round(coeff(rng) * 8) / 8.0);  // feasible at 0
      p.add_row("r" + std::to_string(i), RowSense::GreaterEqual, rhs, std::move(row));
    }
    {
      // box keeps it bounded
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n; ++j) row.push_back({j, -1.0});
      p.add_row("box", RowSense::GreaterEqual, -10.0, std::move(row));
    }
    auto sol = solve_lp(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    VertexOracle oracle;
    oracle.run(p);
    REQUIRE(oracle.best < std::numeric_limits<double>::infinity());
    CHECK(sol.objective == doctest::Approx(oracle.best).epsilon(1e-8));
    auto kkt = check_kkt(p, sol);
    CHECK(kkt.pass(1e-7));
    ++solved;
  }
  CHECK(solved == 200);
}

TEST_CASE("duals act as shadow prices under rhs perturbation") {
  // nondegenerate: min 3x + 5y st x + y >= 4, x + 3y >= 6
  LpProblem p;
  int x = p.add_column("x", 3.0);
  int y = p.add_column("y", 5.0);
  p.add_row("a", RowSense::GreaterEqual, 4.0, {{x, 1.0}, {y, 1.0}});
  p.add_row("b", RowSense::GreaterEqual, 6.0, {{x, 1.0}, {y, 3.0}});
  auto base = solve_lp(p);
  REQUIRE(base.status == SolveStatus::Optimal);
  const double delta = 1e-5;
  for (int i = 0; i < 2; ++i) {
    LpProblem q = p;
    q.rows[i].rhs += delta;
    auto bumped = solve_lp(q);
    REQUIRE(bumped.status == SolveStatus::Optimal);
    CHECK(bumped.objective - base.objective ==
          doctest::Approx(base.dual[i] * delta).epsilon(1e-6));
  }
}

TEST_CASE("identical problems solve to bit-identical vectors") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  LpProblem p;
  for (int j = 0; j < 6; ++j) p.add_column("x" + std::to_string(j), coeff(rng));
  for (int i = 0; i < 5; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < 6; ++j) row.push_back({j, coeff(rng)});
    p.add_row("r" + std::to_string(i), RowSense::GreaterEqual, -1.0, std::move(row));
  }
  {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < 6; ++j) row.push_back({j, -1.0});
    p.add_row("box", RowSense::GreaterEqual, -20.0, std::move(row));
  }
  auto a = solve_lp(p);
  auto b = solve_lp(p);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(std::memcmp(a.primal.data(), b.primal.data(), a.primal.size() * 8) == 0);
  CHECK(std::memcmp(a.dual.data(), b.dual.data(), a.dual.size() * 8) == 0);
}

TEST_CASE("kkt flags an injected primal violation") {
  LpProblem p;
  int x = p.add_column("x", 1.0);
  p.add_row("floor", RowSense::GreaterEqual, 3.0, {{x, 1.0}});
  auto sol = solve_lp(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  sol.primal[x] += 1.0;  // breaks complementarity but not feasibility
  auto kkt = check_kkt(p, sol);
  CHECK(kkt.max_complementarity > 0.5);
  sol.primal[x] -= 3.0;  // now infeasible
  kkt = check_kkt(p, sol);
  CHECK(kkt.max_primal_residual > 0.5);
  CHECK_FALSE(kkt.pass(1e-7));
}

TEST_CASE("explicit dual problem attains the same optimum") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    LpProblem p;
    int n = 3 + static_cast<int>(rng() % 3);
    for (int j = 0; j < n; ++j)
      p.add_column("x" + std::to_string(j), 1.0 + std::abs(coeff(rng)));
    for (int i = 0; i < 3; ++i) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n; ++j) row.push_back({j, coeff(rng)});
      p.add_row("r" + std::to_string(i), RowSense::GreaterEqual, coeff(rng) - 2.5,
                std::move(row));
    }
    auto primal = solve_lp(p);
    REQUIRE(primal.status == SolveStatus::Optimal);
    auto dual = solve_lp(dual_of(p));
    REQUIRE(dual.status == SolveStatus::Optimal);
    CHECK(-dual.objective == doctest::Approx(primal.objective).epsilon(1e-8));
  }
}

TEST_CASE("secondary objective refines within the optimal face") {
  // min x + y st x + y >= 1: every point on the segment is optimal.
  // Secondary objective pulls toward y.
  LpProblem p;
  int x = p.add_column("x", 1.0);
  int y = p.add_column("y", 1.0);
  p.add_row("r", RowSense::GreaterEqual, 1.0, {{x, 1.0}, {y, 1.0}});
  SolverConfig cfg;
  cfg.secondary_costs = {{0.0, 1.0}};  // prefer small y
  auto sol = solve_lp(p, cfg);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0));
  CHECK(sol.primal[y] == doctest::Approx(0.0));
  CHECK(sol.primal[x] == doctest::Approx(1.0));
  CHECK(check_kkt(p, sol).pass(1e-8));

  cfg.secondary_costs = {{1.0, 0.0}};  // prefer small x
  sol = solve_lp(p, cfg);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal[x] == doctest::Approx(0.0));
  CHECK(sol.primal[y] == doctest::Approx(1.0));
  CHECK(check_kkt(p, sol).pass(1e-8));
}

TEST_CASE("repeat solver matches fresh solves across rhs sweeps") {
  LpProblem p;
  int x = p.add_column("x", 2.0);
  int y = p.add_column("y", 1.0);
  p.add_row("a", RowSense::GreaterEqual, 1.0, {{x, 1.0}, {y, 1.0}});
  p.add_row("b", RowSense::Equal, 0.5, {{x, 1.0}, {y, -1.0}});
  RepeatSolver rs(p);
  for (double t : {-2.0, -0.5, 0.0, 0.7, 1.5, 4.0}) {
    std::vector<double> rhs = {1.0 + t, 0.5 - t / 2};
    auto fast = rs.solve(rhs);
    LpProblem q = p;
    q.rows[0].rhs = rhs[0];
    q.rows[1].rhs = rhs[1];
    auto slow = solve_lp(q);
    REQUIRE(fast.status == slow.status);
    if (fast.status == SolveStatus::Optimal)
      CHECK(fast.objective == doctest::Approx(slow.objective).epsilon(1e-10));
  }
}

TEST_CASE("repeat solver reports certificates for infeasible rhs") {
  LpProblem p;
  int x = p.add_column("x", 1.0);
  p.add_row("lo", RowSense::GreaterEqual, 0.0, {{x, 1.0}});
  p.add_row("hi", RowSense::GreaterEqual, 0.0, {{x, -1.0}});  // x <= -rhs
  RepeatSolver rs(p);
  auto ok = rs.solve({1.0, -3.0});  // 1 <= x <= 3
  REQUIRE(ok.status == SolveStatus::Optimal);
  CHECK(ok.objective == doctest::Approx(1.0));
  auto bad = rs.solve({5.0, -3.0});  // 5 <= x <= 3
  REQUIRE(bad.status == SolveStatus::Infeasible);
  double col = bad.farkas[0] - bad.farkas[1];
  double rhs = bad.farkas[0] * 5.0 - bad.farkas[1] * 3.0;
  CHECK(col <= 1e-9);
  CHECK(rhs > 1e-9);
  auto again = rs.solve({1.0, -3.0});
  CHECK(again.status == SolveStatus::Optimal);
}

TEST_CASE("lp text export mentions every named row") {
  LpProblem p;
  int x = p.add_column("x", 1.5);
  p.add_column("z", 0.0, VarBound::Free);
  p.add_row("floor", RowSense::GreaterEqual, 3.0, {{x, 1.0}});
  p.add_row("pin", RowSense::Equal, 0.0, {{1, 1.0}});
  auto text = to_lp_format(p);
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("floor:") != std::string::npos);
  CHECK(text.find("pin:") != std::string::npos);
  CHECK(text.find("z free") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
}
