#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ccmkt/lpcore.hpp"
#include "ccmkt/netmodel.hpp"

namespace ccmkt {

// Inverse CDF of the standard normal distribution (absolute error < 1e-13).
double normal_quantile(double p);

// Standardized (unit-variance) quantile of the forecast-error family for
// probabilities in (0.5, 1). Throws ValidationError outside that range.
double standardized_quantile(const DistributionFamily& family, double prob);

struct QuantileSpec {
  DistributionFamily family;
  double epsilon = 0.0;
  double q = 0.0;  // standardized 1-epsilon quantile
};

QuantileSpec make_quantile_spec(const DistributionFamily& family, double epsilon);

// Index maps from model symbols to LP columns/rows. Entries are -1 where a
// row is not emitted (control rows at zero-sigma buses; everything alpha,
// beta, gamma in the nominal model).
struct ModelIndex {
  // columns, per generator
  std::vector<int> p, r_up, r_dn, a_up, a_dn;
  // columns, per bus
  std::vector<int> w_sch, w_spi, beta, delta0, delta;
  // columns, per load
  std::vector<int> gamma, s;
  // rows, per bus
  std::vector<int> balance, rebalance, control, w_cap, spill_lo, spill_hi;
  // rows, per generator
  std::vector<int> p_cap, ru_lo, ru_hi, rd_lo, rd_hi, band_lo, band_hi;
  // rows, per load
  std::vector<int> curt_lo, curt_hi;
  // rows, per directed line (parallel to directed_from/directed_to)
  std::vector<int> line_sched, line_real;
  std::vector<int> directed_from, directed_to;
  std::vector<double> directed_b, directed_cap;
  int ref_sched = -1, ref_real = -1;
  int pin_rows = 0;  // alpha/beta/gamma pins at zero-sigma buses
  double q = 0.0;
};

struct BuiltLp {
  lp::LpProblem lp;
  ModelIndex index;
};

// Deterministic two-stage dispatch at a known VRES outcome (no recourse
// coefficients, no quantile terms).
BuiltLp build_nominal(const MarketCase& c, std::span<const double> realized_w);

// Deterministic equivalent of the chance-constrained market model.
BuiltLp build_dcco(const MarketCase& c);

struct CcoSolveOptions {
  lp::SolverConfig lp;
  // Deterministic tie-breaks on the optimal faces: prefer the least total
  // expected reserve deployment among cost-optimal dispatches, and the dual
  // vertex that prices spill bounds high and reserve floors low.
  bool canonical_primal = true;
  bool canonical_dual = true;
  double tol = 1e-7;
};

struct CcoSolution {
  // primal, per generator
  std::vector<double> p, r_up, r_dn, a_up, a_dn;
  // primal, per bus
  std::vector<double> w_sch, w_spi, beta, delta0, delta;
  // primal, per load
  std::vector<double> gamma, s;
  // duals, per bus
  std::vector<double> lambda, nu, kappa, mu, y_spill, x_spill;
  // duals, per generator
  std::vector<double> rho, y_up, x_up, y_dn, x_dn, y_band, x_band;
  // duals, per load
  std::vector<double> y_curt, x_curt;
  // duals, per directed line
  std::vector<double> eta_sched, eta_real;

  std::vector<double> sigma_prime;  // q * sigma_{b(i)} per generator
  double q = 0.0;
  double epsilon = 0.0;
  double objective = 0.0;
  lp::KktReport kkt;
  int lp_rows = 0, lp_cols = 0;
  ModelIndex index;  // retained for diagnostics and settlement
};

CcoSolution solve_cco(const MarketCase& c, const CcoSolveOptions& opts = {});

struct ScenarioSet {
  int count = 0;
  std::vector<double> probability;      // size count
  std::vector<std::vector<double>> w;   // [scenario][bus]
  uint64_t seed = 0;
};

// Independent per-(bus, scenario) draws from Normal(forecast, sigma),
// truncated at zero; identical probabilities 1/count.
ScenarioSet sample_scenarios(const MarketCase& c, int count, uint64_t seed);

std::string scenarios_to_csv(const MarketCase& c, const ScenarioSet& s);

struct SoIndex {
  // first stage columns
  std::vector<int> p, w_sch, delta0;
  // second stage columns [scenario][...]
  std::vector<std::vector<int>> r_up, r_dn, s, w_spi, delta;
  // rows
  std::vector<int> balance;                  // per bus
  std::vector<std::vector<int>> rebalance;   // [scenario][bus]
};

struct BuiltSoLp {
  lp::LpProblem lp;
  SoIndex index;
};

BuiltSoLp build_so(const MarketCase& c, const ScenarioSet& scenarios);

struct SoSolveOptions {
  lp::SolverConfig lp;
  // Scenario counts up to this bound solve the assembled LP directly; larger
  // sets go through the two-stage decomposition.
  int direct_limit = 24;
  bool force_direct = false;
  bool force_decomposition = false;
  double tol = 1e-6;
  int max_rounds = 600;
};

struct SoSolution {
  std::vector<double> p, w_sch, delta0;
  std::vector<std::vector<double>> r_up, r_dn, s, w_spi, delta;  // [scenario]
  std::vector<double> lambda;              // per bus
  std::vector<std::vector<double>> nu;     // [scenario][bus]
  std::vector<double> probability;
  double objective = 0.0;
  lp::KktReport kkt;
  int lp_rows = 0, lp_cols = 0;
  int rounds = 0;  // decomposition rounds (0 when solved directly)
};

SoSolution solve_so(const MarketCase& c, const ScenarioSet& scenarios,
                    const SoSolveOptions& opts = {});

// Counter-based uniform in (0, 1): independent of evaluation order.
double counter_uniform(uint64_t seed, uint64_t index, uint64_t stream);

}  // namespace ccmkt
