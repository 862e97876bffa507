#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ccmkt/errors.hpp"
#include "ccmkt/pricing.hpp"
#include "support.hpp"

using namespace ccmkt;

TEST_CASE("reserve adders reproduce the published real-time prices") {
  MarketCase c = testing::case1();
  auto sol = solve_cco(c);
  auto tau = compute_tau(c, sol);
  // G3 and G4 share the bus-3 budget shadow price
  CHECK(sol.nu[2] + tau.tau_up[2] == doctest::Approx(30.0).epsilon(1e-6));
  CHECK(sol.nu[1] + tau.tau_up[1] == doctest::Approx(25.0).epsilon(1e-6));
  CHECK(tau.tau_up[2] == doctest::Approx(5.0));
  CHECK(tau.tau_dn[2] == doctest::Approx(5.0));
  CHECK(tau.tau_up[1] == doctest::Approx(0.0));
  // G1 sits at the bus without uncertainty: adders fall back to floor duals
  CHECK(tau.tau_up[0] == doctest::Approx(sol.y_up[0]));
  CHECK(tau.tau_dn[0] == doctest::Approx(sol.y_dn[0]));
  CHECK(sol.nu[0] + tau.tau_up[0] == doctest::Approx(25.0));
}

TEST_CASE("zero shadow price with zero floor duals gives zero adders") {
  MarketCase c = testing::case1();
  auto sol = solve_cco(c);
  // bus 2: budget shadow price is zero and G2's floor duals vanish
  CHECK(sol.kappa[1] == doctest::Approx(0.0));
  auto tau = compute_tau(c, sol);
  CHECK(tau.tau_up[1] == doctest::Approx(0.0));
  CHECK(tau.tau_dn[1] == doctest::Approx(0.0));
  CHECK(tau.tied_up[1]);  // both branches coincide at zero
}

TEST_CASE("load adder reproduces the published scheduled load price") {
  MarketCase c = testing::case1();
  auto sol = solve_cco(c);
  auto tau = compute_tau(c, sol);
  double zeta = compute_zeta(c, sol, tau);
  CHECK(sol.lambda[0] + zeta == doctest::Approx(15.29).epsilon(5e-4));
  CHECK(zeta == doctest::Approx(-9.713682).epsilon(1e-5));
}

TEST_CASE("zero adders and zero spill duals give zero load adder") {
  MarketCase c = testing::case1();
  auto sol = solve_cco(c);
  for (auto& v : sol.y_spill) v = 0.0;
  for (auto& v : sol.x_spill) v = 0.0;
  for (auto& v : sol.kappa) v = 0.0;
  for (auto& v : sol.y_up) v = 0.0;
  for (auto& v : sol.y_dn) v = 0.0;
  auto tau = compute_tau(c, sol);
  CHECK(compute_zeta(c, sol, tau) == doctest::Approx(0.0));
}

TEST_CASE("price schedule matches the published scheduling-stage columns") {
  MarketCase c = testing::case1();
  auto sol = solve_cco(c);
  auto prices = cco_prices(c, sol);
  for (int n = 0; n < 3; ++n) CHECK(prices.energy_sched[n] == doctest::Approx(25.0));
  CHECK(prices.vres_sched[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(prices.vres_sched[2] == doctest::Approx(0.0).epsilon(1e-6));
  for (int n = 0; n < 3; ++n)
    CHECK(prices.load_sched[n] == doctest::Approx(15.29).epsilon(5e-4));
  // real-time columns
  CHECK(prices.reserve_up[0] == doctest::Approx(25.0));
  CHECK(prices.reserve_up[1] == doctest::Approx(25.0));
  CHECK(prices.reserve_up[2] == doctest::Approx(30.0));
  CHECK(prices.reserve_up[3] == doctest::Approx(30.0));
  CHECK(prices.reserve_dn[0] == doctest::Approx(25.0));
  CHECK(prices.reserve_dn[1] == doctest::Approx(25.0));
  CHECK(prices.reserve_dn[2] == doctest::Approx(20.0));
  CHECK(prices.reserve_dn[3] == doctest::Approx(20.0));
  CHECK(prices.vres_deviation[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(prices.curtailment[0] == doctest::Approx(15.29).epsilon(5e-4));
}

TEST_CASE("halved reserves push the real-time prices to curtailment cost") {
  MarketCase c = testing::case_variant(2);
  auto sol = solve_cco(c);
  auto prices = cco_prices(c, sol);
  CHECK(prices.reserve_up[0] == doctest::Approx(24.25).epsilon(1e-6));
  CHECK(prices.reserve_up[1] == doctest::Approx(48.50).epsilon(1e-6));
  CHECK(prices.reserve_up[2] == doctest::Approx(48.50).epsilon(1e-6));
  CHECK(prices.reserve_up[3] == doctest::Approx(48.50).epsilon(1e-6));
  CHECK(prices.curtailment[0] == doctest::Approx(16.97).epsilon(5e-4));
}

TEST_CASE("scaled reserve costs shift the adders proportionally") {
  MarketCase c = testing::case_variant(3);
  auto sol = solve_cco(c);
  auto prices = cco_prices(c, sol);
  CHECK(prices.reserve_up[0] == doctest::Approx(25.00).epsilon(1e-6));
  CHECK(prices.reserve_up[1] == doctest::Approx(26.25).epsilon(1e-6));
  CHECK(prices.reserve_up[2] == doctest::Approx(31.50).epsilon(1e-6));
  CHECK(prices.reserve_up[3] == doctest::Approx(31.50).epsilon(1e-6));
  CHECK(prices.reserve_dn[1] == doctest::Approx(23.75).epsilon(1e-6));
  CHECK(prices.reserve_dn[2] == doctest::Approx(18.50).epsilon(1e-6));
}

TEST_CASE("adder branches stay consistent with their sign conditions") {
  for (int variant : {1, 2, 3, 4}) {
    MarketCase c = variant == 1 ? testing::case1() : testing::case_variant(variant);
    auto sol = solve_cco(c);
    auto tau = compute_tau(c, sol);
    for (int i = 0; i < c.num_generators(); ++i) {
      double sp = sol.sigma_prime[i];
      if (sp <= 0.0) {
        CHECK(tau.tau_up[i] == doctest::Approx(sol.y_up[i]));
        continue;
      }
      int n = c.bus_index(c.generators[i].bus);
      double kappa = sol.kappa[n];
      bool is_kappa = std::abs(tau.tau_up[i] - kappa / sp) <= 1e-7;
      bool is_floor = std::abs(tau.tau_up[i] - sol.y_up[i]) <= 1e-7;
      CHECK((is_kappa || is_floor));
      if (is_kappa && !is_floor) CHECK(kappa - sp * sol.y_up[i] >= -1e-6);
      if (is_floor && !is_kappa) CHECK(kappa - sp * sol.y_up[i] <= 1e-6);
    }
  }
}

TEST_CASE("price schedules are uncertainty uniform by construction") {
  MarketCase c = testing::case1();
  auto sol = solve_cco(c);
  auto prices = cco_prices(c, sol);
  // one number per action: no per-scenario dimension exists in the type
  CHECK(prices.reserve_up.size() == static_cast<size_t>(c.num_generators()));
  CHECK(prices.curtailment.size() == static_cast<size_t>(c.num_buses()));
}

TEST_CASE("scenario prices are locationally uniform per scenario") {
  MarketCase c = testing::case1();
  auto sc = sample_scenarios(c, 15, 12);
  auto sol = solve_so(c, sc, {});
  auto prices = so_prices(c, sol, sc);
  REQUIRE(prices.real_time.size() == 3);
  for (int n = 0; n < 3; ++n)
    CHECK(prices.real_time[n].size() == static_cast<size_t>(sc.count));
  // all actions at one bus share the bus price by construction; across buses
  // they agree here because the network is uncongested
  for (int w = 0; w < sc.count; ++w)
    for (int n = 1; n < 3; ++n)
      CHECK(prices.real_time[n][w] ==
            doctest::Approx(prices.real_time[0][w]).epsilon(1e-6));
}

TEST_CASE("degenerate scenario set gives a single price with zero spread") {
  MarketCase c = testing::case1();
  ScenarioSet sc;
  sc.count = 1;
  sc.probability = {1.0};
  sc.w = {{0.0, 34.5, 80.0}};
  auto sol = solve_so(c, sc, {});
  auto prices = so_prices(c, sol, sc);
  for (int n = 0; n < 3; ++n) {
    CHECK(prices.real_time_std[n] == doctest::Approx(0.0));
    CHECK(prices.real_time_mean[n] == doctest::Approx(prices.real_time[n][0]));
  }
}

TEST_CASE("without uncertainty both schemes quote the same prices") {
  MarketCase c = testing::case1();
  for (auto& v : c.vres) v.sigma = 0.0;
  validate_case(c);
  auto cco_sol = solve_cco(c);
  auto cco = cco_prices(c, cco_sol);
  auto sc = sample_scenarios(c, 5, 1);  // all scenarios equal the forecast
  auto so_sol = solve_so(c, sc, {});
  auto so = so_prices(c, so_sol, sc);
  for (int n = 0; n < c.num_buses(); ++n) {
    CHECK(so.real_time_std[n] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(cco.energy_sched[n] == doctest::Approx(so.energy_sched[n]).epsilon(1e-6));
  }
}

TEST_CASE("curtailment-cost mass point appears under scarce reserves") {
  MarketCase c = testing::case_variant(4);
  auto sc = sample_scenarios(c, 300, 21);
  auto sol = solve_so(c, sc, {});
  auto prices = so_prices(c, sol, sc);
  bool hit = false;
  for (int w = 0; w < sc.count && !hit; ++w)
    if (std::abs(prices.real_time[0][w] - 48.50) < 1e-4) hit = true;
  CHECK(hit);
}
