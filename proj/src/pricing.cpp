#include "ccmkt/pricing.hpp"

#include <cmath>

#include "ccmkt/errors.hpp"

namespace ccmkt {

TauResult compute_tau(const MarketCase& c, const CcoSolution& sol, double tol) {
  const int I = c.num_generators();
  TauResult out;
  out.tau_up.resize(I);
  out.tau_dn.resize(I);
  out.tied_up.assign(I, false);
  out.tied_dn.assign(I, false);
  for (int i = 0; i < I; ++i) {
    int n = c.bus_index(c.generators[i].bus);
    double sp = sol.sigma_prime[i];
    if (sp <= 0.0) {
      // bus without uncertainty: the budget row does not exist there and the
      // adder falls back to the reserve-floor duals
      out.tau_up[i] = sol.y_up[i];
      out.tau_dn[i] = sol.y_dn[i];
      continue;
    }
    double kappa = sol.kappa[n];
    double gap_up = kappa - sp * sol.y_up[i];
    if (std::abs(gap_up) <= tol) {
      out.tau_up[i] = kappa / sp;
      out.tied_up[i] = true;
    } else {
      out.tau_up[i] = gap_up > 0.0 ? kappa / sp : sol.y_up[i];
    }
    double gap_dn = kappa - sp * sol.y_dn[i];
    if (std::abs(gap_dn) <= tol) {
      out.tau_dn[i] = kappa / sp;
      out.tied_dn[i] = true;
    } else {
      out.tau_dn[i] = gap_dn > 0.0 ? kappa / sp : sol.y_dn[i];
    }
  }
  return out;
}

double compute_zeta(const MarketCase& c, const CcoSolution& sol, const TauResult& tau,
                    double tol) {
  double numerator = 0.0;
  for (int n = 0; n < c.num_buses(); ++n) {
    for (int i : c.generators_at(n))
      numerator += tau.tau_up[i] * sol.r_up[i] + tau.tau_dn[i] * sol.r_dn[i];
    numerator -=
        (sol.y_spill[n] - sol.x_spill[n]) * (c.forecast_at(n) - sol.w_spi[n]);
  }
  double denominator = 0.0;
  for (int j = 0; j < c.num_loads(); ++j) denominator += c.loads[j].demand - sol.s[j];
  if (denominator <= tol)
    throw AssumptionViolationError(
        "total served load is zero; the load-price adder is undefined");
  return numerator / denominator;
}

PriceSchedule cco_prices(const MarketCase& c, const CcoSolution& sol) {
  const int B = c.num_buses(), I = c.num_generators();
  TauResult tau = compute_tau(c, sol);
  PriceSchedule p;
  p.zeta = compute_zeta(c, sol, tau);
  p.tau_up = tau.tau_up;
  p.tau_dn = tau.tau_dn;
  p.energy_sched.resize(B);
  p.vres_sched.resize(B);
  p.load_sched.resize(B);
  p.rebalance.resize(B);
  p.vres_deviation.resize(B);
  p.curtailment.resize(B);
  for (int n = 0; n < B; ++n) {
    double spill_term = sol.y_spill[n] - sol.x_spill[n];
    p.energy_sched[n] = sol.lambda[n];
    p.vres_sched[n] = sol.lambda[n] - spill_term;
    p.load_sched[n] = sol.lambda[n] + p.zeta;
    p.rebalance[n] = sol.nu[n];
    p.vres_deviation[n] = sol.nu[n] - spill_term;
    p.curtailment[n] = sol.nu[n] + p.zeta;
  }
  p.reserve_up.resize(I);
  p.reserve_dn.resize(I);
  for (int i = 0; i < I; ++i) {
    int n = c.bus_index(c.generators[i].bus);
    p.reserve_up[i] = sol.nu[n] + tau.tau_up[i];
    p.reserve_dn[i] = sol.nu[n] - tau.tau_dn[i];
  }
  for (double v : p.vres_sched)
    if (!std::isfinite(v)) throw AdequacyError("non-finite price composed from duals");
  return p;
}

SoPriceSchedule so_prices(const MarketCase& c, const SoSolution& sol,
                          const ScenarioSet& scenarios) {
  const int B = c.num_buses();
  const int W = scenarios.count;
  SoPriceSchedule p;
  p.energy_sched = sol.lambda;
  p.real_time.assign(B, std::vector<double>(W, 0.0));
  p.real_time_mean.assign(B, 0.0);
  p.real_time_std.assign(B, 0.0);
  for (int n = 0; n < B; ++n) {
    double mean = 0.0;
    for (int w = 0; w < W; ++w) {
      double price = sol.nu[w][n] / scenarios.probability[w];
      p.real_time[n][w] = price;
      mean += scenarios.probability[w] * price;
    }
    double var = 0.0;  // centered pass avoids cancellation on flat series
    for (int w = 0; w < W; ++w) {
      double d = p.real_time[n][w] - mean;
      var += scenarios.probability[w] * d * d;
    }
    p.real_time_mean[n] = mean;
    p.real_time_std[n] = std::sqrt(std::max(0.0, var));
  }
  return p;
}

}  // namespace ccmkt
