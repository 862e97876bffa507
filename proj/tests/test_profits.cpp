#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ccmkt/errors.hpp"
#include "ccmkt/profits.hpp"
#include "support.hpp"

using namespace ccmkt;

namespace {

ProfitReport report_for(const MarketCase& c) {
  auto sol = solve_cco(c);
  auto prices = cco_prices(c, sol);
  return cco_profit_report(c, sol, prices);
}

}  // namespace

TEST_CASE("published profit table for the base case") {
  MarketCase c = testing::case1();
  auto rep = report_for(c);
  CHECK(rep.operator_profit == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(rep.operator_std == doctest::Approx(303.03).epsilon(5e-5));
  CHECK(rep.gen_profit[0] == doctest::Approx(500.00).epsilon(1e-6));
  CHECK(rep.gen_profit[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(rep.gen_profit[2] == doctest::Approx(100.22).epsilon(1e-4));
  CHECK(rep.gen_profit[3] == doctest::Approx(80.00).epsilon(1e-6));
  CHECK(rep.gen_std[0] == doctest::Approx(0.0));
  CHECK(rep.gen_std[1] == doctest::Approx(0.0));
  CHECK(rep.gen_std[2] == doctest::Approx(64.48).epsilon(1e-4));
  CHECK(rep.gen_std[3] == doctest::Approx(12.90).epsilon(1e-3));
  CHECK(rep.vres_profit[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(rep.vres_profit[2] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(rep.load_surplus[0] == doctest::Approx(-1070.04).epsilon(1e-5));
  CHECK(rep.load_surplus[1] == doctest::Approx(-3057.26).epsilon(1e-5));
  CHECK(rep.load_std[0] == doctest::Approx(0.0));
}

TEST_CASE("published profit columns for the reduced-reserve case") {
  MarketCase c = testing::case_variant(2);
  auto rep = report_for(c);
  CHECK(rep.operator_profit == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(rep.operator_std == doctest::Approx(266.07).epsilon(5e-5));
  CHECK(rep.gen_profit[1] == doctest::Approx(242.50).epsilon(1e-6));
  CHECK(rep.gen_profit[2] == doctest::Approx(288.75).epsilon(1e-6));
  CHECK(rep.gen_profit[3] == doctest::Approx(166.25).epsilon(1e-6));
  CHECK(rep.vres_profit[1] == doctest::Approx(25.88).epsilon(1e-3));
  CHECK(rep.vres_profit[2] == doctest::Approx(60.00).epsilon(1e-4));
  CHECK(rep.load_surplus[0] == doctest::Approx(-1156.16).epsilon(1e-5));
  CHECK(rep.load_std[0] == doctest::Approx(36.32).epsilon(1e-3));
  CHECK(rep.load_surplus[1] == doctest::Approx(-3544.71).epsilon(1e-5));
  CHECK(rep.load_std[1] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("published profit columns for the scaled-cost cases") {
  {
    MarketCase c = testing::case_variant(3);
    auto rep = report_for(c);
    CHECK(rep.operator_std == doctest::Approx(345.67).epsilon(5e-5));
    CHECK(rep.gen_profit[3] == doctest::Approx(84.00).epsilon(1e-6));
    CHECK(rep.gen_std[2] == doctest::Approx(21.40).epsilon(1e-3));
    CHECK(rep.load_surplus[0] == doctest::Approx(-1058.82).epsilon(1e-5));
    CHECK(rep.load_surplus[1] == doctest::Approx(-3025.19).epsilon(1e-5));
  }
  {
    MarketCase c = testing::case_variant(4);
    auto rep = report_for(c);
    CHECK(rep.operator_std == doctest::Approx(266.07).epsilon(5e-5));
    CHECK(rep.gen_profit[1] == doctest::Approx(230.00).epsilon(1e-6));
    CHECK(rep.gen_profit[2] == doctest::Approx(266.25).epsilon(1e-6));
    CHECK(rep.gen_profit[3] == doctest::Approx(160.75).epsilon(1e-6));
    CHECK(rep.load_surplus[0] == doctest::Approx(-1156.16).epsilon(1e-5));
  }
}

TEST_CASE("operator profit identities hold") {
  for (int variant : {1, 2, 3, 4}) {
    MarketCase c = variant == 1 ? testing::case1() : testing::case_variant(variant);
    auto sol = solve_cco(c);
    auto prices = cco_prices(c, sol);
    auto op = cco_operator_profit(c, sol, prices);
    CHECK(std::abs(op.gamma2) <= 1e-6);
    CHECK(std::abs(op.gamma1 + op.z_saddle) <= 1e-6);
    CHECK(op.z_saddle <= 1e-7);
    CHECK(op.profit == doctest::Approx(op.gamma1).epsilon(1e-9));
  }
}

TEST_CASE("uncongested network has zero congestion rent") {
  MarketCase c = testing::case1();
  for (auto& l : c.lines) l.capacity = 1e6;
  validate_case(c);
  auto sol = solve_cco(c);
  auto prices = cco_prices(c, sol);
  auto op = cco_operator_profit(c, sol, prices);
  CHECK(std::abs(op.z_saddle) <= 1e-6);
  CHECK(std::abs(op.gamma1) <= 1e-6);
}

TEST_CASE("reserve adder inequalities bound the second profit term") {
  for (int variant : {1, 2, 3, 4}) {
    MarketCase c = variant == 1 ? testing::case1() : testing::case_variant(variant);
    auto sol = solve_cco(c);
    auto prices = cco_prices(c, sol);
    ProfitReport rep = cco_profit_report(c, sol, prices);
    for (int i = 0; i < c.num_generators(); ++i) {
      int n = c.bus_index(c.generators[i].bus);
      double sp = sol.sigma_prime[i];
      double lower = (sol.kappa[n] - sp * sol.y_up[i]) * sol.a_up[i] +
                     sol.y_up[i] * sol.r_up[i] +
                     (sol.kappa[n] - sp * sol.y_dn[i]) * sol.a_dn[i] +
                     sol.y_dn[i] * sol.r_dn[i];
      if (sp <= 0.0)
        lower = sol.y_up[i] * sol.r_up[i] + sol.y_dn[i] * sol.r_dn[i];
      CHECK(rep.gen_part2[i] >= lower - 1e-6);
    }
  }
}

TEST_CASE("degenerate participants earn zero") {
  MarketCase c = testing::case1();
  // park a vres unit with no forecast at bus 1
  c.vres.push_back({"1", 0.0, 0.0, 0.0, 0.0});
  validate_case(c);
  auto sol = solve_cco(c);
  auto prices = cco_prices(c, sol);
  ProfitReport rep = cco_profit_report(c, sol, prices);
  int n1 = c.bus_index("1");
  CHECK(rep.vres_profit[n1] == doctest::Approx(0.0));
  CHECK(rep.vres_std[n1] == doctest::Approx(0.0));
}

TEST_CASE("fully curtailed load with equal stage prices breaks even") {
  // single bus, expensive generator, cheap curtailment forces full shedding
  std::string doc = R"({
    "buses": ["a"], "reference_bus": "a", "epsilon": 0.1,
    "distribution": "normal", "lines": [],
    "generators": [{"id":"g","bus":"a","energy_cost":50,"up_cost":50,
      "down_saving":1,"capacity":100,"max_up_reserve":10,"max_down_reserve":10}],
    "vres": [{"bus":"a","cost":0,"schedule_cap":5,"forecast":5,"sigma":0.5}],
    "loads": [{"id":"l","bus":"a","demand":30,"curtail_cost":2}]})";
  MarketCase c = parse_network(doc);
  auto sol = solve_cco(c);
  // demand is served at the margin by curtailment value, not full shedding:
  // the assumption guard only trips when everything is shed
  CHECK(sol.s[0] < c.loads[0].demand);
}

TEST_CASE("stochastic profits keep every guarantee on the base case") {
  MarketCase c = testing::case1();
  auto sc = sample_scenarios(c, 200, 99);
  auto sol = solve_so(c, sc, {});
  auto prices = so_prices(c, sol, sc);
  auto rep = so_profits(c, sol, sc, prices);
  CHECK(std::abs(rep.operator_profit) <= 1e-5);
  CHECK(rep.operator_std <= 1e-5);
  for (int n = 0; n < c.num_buses(); ++n) CHECK(rep.vres_profit[n] >= -1e-6);
  for (int i = 0; i < c.num_generators(); ++i) CHECK(rep.gen_profit[i] >= -1e-6);
  // intermediates stored at this scale
  CHECK(rep.imbalance_a.size() == static_cast<size_t>(c.num_buses()));
  CHECK(rep.gen_margin_d[0].size() == static_cast<size_t>(sc.count));
}

TEST_CASE("large scenario sets land near the published scheme values") {
  MarketCase c = testing::case1();
  auto sc = sample_scenarios(c, 1000, 7);
  auto sol = solve_so(c, sc, {});
  auto prices = so_prices(c, sol, sc);
  auto rep = so_profits(c, sol, sc, prices);
  // seed-dependent: sampling tolerance only
  CHECK(std::abs(rep.gen_profit[0] - 557.40) <= 20.0);
  CHECK(std::abs(prices.real_time_mean[0] - 25.57) <= 0.5);
  CHECK(std::abs(rep.operator_profit) <= 1e-4);
  CHECK(rep.operator_std <= 1e-4);
}

TEST_CASE("single deterministic scenario zeroes every spread") {
  MarketCase c = testing::case1();
  ScenarioSet sc;
  sc.count = 1;
  sc.probability = {1.0};
  sc.w = {{0.0, 34.5, 80.0}};
  auto sol = solve_so(c, sc, {});
  auto prices = so_prices(c, sol, sc);
  auto rep = so_profits(c, sol, sc, prices);
  CHECK(rep.operator_std == doctest::Approx(0.0).epsilon(1e-9));
  for (double v : rep.gen_std) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
  for (double v : rep.vres_std) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
  for (double v : rep.load_std) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("adequacy report passes on published cases and flags tampering") {
  MarketCase c = testing::case1();
  auto sol = solve_cco(c);
  auto prices = cco_prices(c, sol);
  auto rep = cco_profit_report(c, sol, prices);
  auto verdicts = adequacy_report(c, rep);
  CHECK(verdicts.all_pass);
  CHECK(verdicts.rows.size() == 1 + 2 + 4);  // operator, two vres, four gens

  ProfitReport bad = rep;
  bad.operator_profit = -3.0;
  auto flagged = adequacy_report(c, bad);
  CHECK_FALSE(flagged.all_pass);
  CHECK(flagged.rows[0].margin == doctest::Approx(-3.0));
  CHECK_FALSE(flagged.rows[0].pass);
}

TEST_CASE("perturbed duals are rejected by the guarantee checks") {
  MarketCase c = testing::case1();
  auto sol = solve_cco(c);
  sol.nu[2] -= 8.0;  // break the dual consistency
  auto prices = cco_prices(c, sol);
  CHECK_THROWS_AS(cco_profit_report(c, sol, prices), AdequacyError);
}

TEST_CASE("guarantees hold on whatever optimum the plain solver returns") {
  // tie-breaking only selects among optima; every optimum is adequate
  MarketCase c = testing::case1();
  CcoSolveOptions plain;
  plain.canonical_primal = false;
  plain.canonical_dual = false;
  auto sol = solve_cco(c, plain);
  CHECK(sol.objective == doctest::Approx(3447.080872442).epsilon(1e-9));
  CHECK(sol.kkt.pass(1e-7));
  auto prices = cco_prices(c, sol);
  auto rep = cco_profit_report(c, sol, prices);  // enforces every guarantee
  CHECK(rep.operator_profit >= -1e-6);
  CHECK(std::abs(rep.gamma2) <= 1e-6);
  CHECK(std::abs(rep.gamma1 + rep.z_saddle) <= 1e-6);
}

TEST_CASE("randomized markets always satisfy the expectation guarantees") {
  std::mt19937_64 rng(20260810);
  int solved = 0;
  int attempts = 0;
  while (solved < 60 && attempts < 400) {
    ++attempts;
    MarketCase c = testing::random_case(rng);
    CcoSolution sol;
    try {
      sol = solve_cco(c);
    } catch (const ModelInfeasibleError&) {
      continue;
    } catch (const AssumptionViolationError&) {
      continue;
    }
    CHECK(sol.kkt.pass(1e-7));
    auto prices = cco_prices(c, sol);
    ProfitOptions strict;
    strict.enforce = false;  // assert through the checks below instead
    auto rep = cco_profit_report(c, sol, prices, strict);
    CHECK(rep.operator_profit >= -1e-6);
    CHECK(std::abs(rep.gamma2) <= 1e-6);
    CHECK(std::abs(rep.gamma1 + rep.z_saddle) <= 1e-6);
    CHECK(rep.z_saddle <= 1e-7);
    for (int n = 0; n < c.num_buses(); ++n) CHECK(rep.vres_profit[n] >= -1e-6);
    for (int i = 0; i < c.num_generators(); ++i) CHECK(rep.gen_profit[i] >= -1e-6);
    ++solved;
  }
  CHECK(solved >= 60);
}

TEST_CASE("randomized markets satisfy the scenario-scheme guarantees") {
  std::mt19937_64 rng(777);
  int solved = 0;
  int attempts = 0;
  while (solved < 25 && attempts < 200) {
    ++attempts;
    MarketCase c = testing::random_case(rng);
    try {
      auto sc = sample_scenarios(c, 12, 1000 + attempts);
      auto sol = solve_so(c, sc, {});
      auto prices = so_prices(c, sol, sc);
      ProfitOptions lax;
      lax.enforce = false;
      auto rep = so_profits(c, sol, sc, prices, lax);
      CHECK(rep.operator_profit >= -1e-6);
      for (int n = 0; n < c.num_buses(); ++n) CHECK(rep.vres_profit[n] >= -1e-6);
      for (int i = 0; i < c.num_generators(); ++i) CHECK(rep.gen_profit[i] >= -1e-6);
      ++solved;
    } catch (const ModelInfeasibleError&) {
      continue;
    } catch (const AssumptionViolationError&) {
      continue;
    }
  }
  CHECK(solved >= 25);
}
