#pragma once

#include <vector>

#include "ccmkt/clearing.hpp"
#include "ccmkt/netmodel.hpp"

namespace ccmkt {

// Per-generator reserve price adders. `tied` marks generators where both
// branches of the adder definition coincide numerically.
struct TauResult {
  std::vector<double> tau_up, tau_dn;
  std::vector<bool> tied_up, tied_dn;
};

// Prices composed from the chance-constrained duals. Real-time prices are
// uncertainty uniform: none of these depend on the realized forecast error.
struct PriceSchedule {
  // per bus
  std::vector<double> energy_sched;     // lambda_n
  std::vector<double> vres_sched;       // lambda_n - y_n + x_n (spill duals)
  std::vector<double> load_sched;       // lambda_n + zeta
  std::vector<double> rebalance;        // nu_n
  std::vector<double> vres_deviation;   // nu_n - y_n + x_n
  std::vector<double> curtailment;      // nu_n + zeta
  // per generator
  std::vector<double> reserve_up;       // nu_b(i) + tau_up
  std::vector<double> reserve_dn;       // nu_b(i) - tau_dn
  std::vector<double> tau_up, tau_dn;
  double zeta = 0.0;
};

// Scheduled price plus the per-scenario real-time price series.
struct SoPriceSchedule {
  std::vector<double> energy_sched;                 // lambda_n per bus
  std::vector<std::vector<double>> real_time;       // [bus][scenario] nu/pi
  std::vector<double> real_time_mean, real_time_std;  // probability weighted
};

TauResult compute_tau(const MarketCase& c, const CcoSolution& sol, double tol = 1e-9);

// Uniform load-price adder that zeroes the operator's second profit term.
double compute_zeta(const MarketCase& c, const CcoSolution& sol,
                    const TauResult& tau, double tol = 1e-9);

PriceSchedule cco_prices(const MarketCase& c, const CcoSolution& sol);

SoPriceSchedule so_prices(const MarketCase& c, const SoSolution& sol,
                          const ScenarioSet& scenarios);

}  // namespace ccmkt
