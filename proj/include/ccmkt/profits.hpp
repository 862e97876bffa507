#pragma once

#include <string>
#include <vector>

#include "ccmkt/clearing.hpp"
#include "ccmkt/netmodel.hpp"
#include "ccmkt/pricing.hpp"

namespace ccmkt {

struct ProfitOptions {
  double tol = 1e-6;        // identity and cost-recovery tolerance
  bool enforce = true;      // throw AdequacyError on violated guarantees
};

// Closed-form expected profits and profit volatilities of every participant
// under the chance-constrained prices, plus the internal decomposition used
// to certify the operator side (first term equals the negated congestion
// subproblem value; the second term vanishes by construction of the load
// adder).
struct ProfitReport {
  double operator_profit = 0.0;
  double operator_std = 0.0;  // assumes independent per-bus forecast errors
  double gamma1 = 0.0, gamma2 = 0.0;
  double z_saddle = 0.0;
  std::vector<double> vres_profit, vres_std;                    // per bus
  std::vector<double> gen_profit, gen_std, gen_part1, gen_part2;  // per generator
  std::vector<double> load_surplus, load_std;                   // per load
};

struct OperatorProfit {
  double profit, stddev, gamma1, gamma2, z_saddle;
};

OperatorProfit cco_operator_profit(const MarketCase& c, const CcoSolution& sol,
                                   const PriceSchedule& prices,
                                   const ProfitOptions& opts = {});

void cco_vres_profit(const MarketCase& c, const CcoSolution& sol,
                     const PriceSchedule& prices, std::vector<double>& profit,
                     std::vector<double>& stddev, const ProfitOptions& opts = {});

void cco_generator_profit(const MarketCase& c, const CcoSolution& sol,
                          const PriceSchedule& prices, std::vector<double>& profit,
                          std::vector<double>& stddev, std::vector<double>& part1,
                          std::vector<double>& part2, const ProfitOptions& opts = {});

void cco_consumer_surplus(const MarketCase& c, const CcoSolution& sol,
                          const PriceSchedule& prices, std::vector<double>& surplus,
                          std::vector<double>& stddev);

ProfitReport cco_profit_report(const MarketCase& c, const CcoSolution& sol,
                               const PriceSchedule& prices,
                               const ProfitOptions& opts = {});

// Expected profits and volatilities under the scenario-based prices.
struct SoProfitReport {
  double operator_profit = 0.0, operator_std = 0.0;
  std::vector<double> vres_profit, vres_std;    // per bus
  std::vector<double> gen_profit, gen_std;      // per generator
  std::vector<double> load_surplus, load_std;   // per load
  // per-scenario intermediates, stored only for moderate scenario counts
  std::vector<std::vector<double>> imbalance_a;   // [bus][scenario]
  std::vector<std::vector<double>> vres_margin_b; // [bus][scenario]
  std::vector<std::vector<double>> gen_margin_d;  // [generator][scenario]
};

SoProfitReport so_profits(const MarketCase& c, const SoSolution& sol,
                          const ScenarioSet& scenarios, const SoPriceSchedule& prices,
                          const ProfitOptions& opts = {});

struct AdequacyRow {
  std::string participant;
  double margin = 0.0;  // expected profit; negative means the guarantee failed
  bool pass = false;
};

struct AdequacyReport {
  std::vector<AdequacyRow> rows;
  bool all_pass = true;
};

AdequacyReport adequacy_report(const MarketCase& c, const ProfitReport& cco,
                               const SoProfitReport* so = nullptr, double tol = 1e-6);

}  // namespace ccmkt
