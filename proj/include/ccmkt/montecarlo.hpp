#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ccmkt/clearing.hpp"
#include "ccmkt/netmodel.hpp"
#include "ccmkt/pricing.hpp"
#include "ccmkt/profits.hpp"

namespace ccmkt {

// One realized forecast error applied through the affine controls, with
// violation flags for every individually chance-constrained quantity band.
struct RealTimeOutcome {
  std::vector<double> draw;        // forecast error per bus
  std::vector<double> realized_w;  // forecast + error (may be negative; flagged)
  std::vector<double> r_up, r_dn;  // per generator
  std::vector<double> w_spi;       // per bus
  std::vector<double> s;           // per load
  // flags, one entry per element of the respective family
  std::vector<uint8_t> ru_low, ru_high, rd_low, rd_high, band_low, band_high;
  std::vector<uint8_t> spill_low, spill_high, wind_negative;
  std::vector<uint8_t> curt_low, curt_high;
  double rebalance_residual = 0.0;  // max over buses
};

RealTimeOutcome realize(const MarketCase& c, const CcoSolution& sol,
                        const std::vector<double>& draw);

// Cash transfers for one realization under the uncertainty-uniform prices.
// Cash excludes private production costs; profits include them.
struct Settlement {
  std::vector<double> gen_cash, gen_profit;    // per generator
  std::vector<double> vres_cash, vres_profit;  // per bus
  std::vector<double> load_cash;               // per load (equals surplus)
  double operator_cash = 0.0;
  double conservation_gap = 0.0;  // |operator + sum of participant cash|
};

Settlement settle(const MarketCase& c, const RealTimeOutcome& outcome,
                  const PriceSchedule& prices, const CcoSolution& sol);

struct ParticipantStats {
  std::string name;
  double mean = 0.0, stddev = 0.0, std_error = 0.0;
  double analytic_mean = 0.0, analytic_std = 0.0;
  double z_score = 0.0;  // (mean - analytic_mean) / std_error
};

struct BoundStats {
  std::string name;
  long violations = 0;
  double frequency = 0.0;
};

struct EmpiricalStats {
  long draws = 0;
  uint64_t seed = 0;
  bool insufficient_n = false;  // fewer than two draws: stddev undefined
  std::vector<ParticipantStats> participants;
  std::vector<BoundStats> bounds;
  double max_conservation_gap = 0.0;
  double max_rebalance_residual = 0.0;
};

// Draws forecast errors from the case's distribution family (errors are NOT
// truncated at zero realized power; negative outcomes are only flagged so the
// moment checks stay unbiased), settles each one, and accumulates
// per-participant moments and per-bound violation frequencies. When `trace`
// is given, one CSV row per draw (error vector + participant cash flows) is
// streamed into it; the file grows linearly with the draw count.
EmpiricalStats simulate(const MarketCase& c, const CcoSolution& sol,
                        const PriceSchedule& prices, const ProfitReport& analytic,
                        long draws, uint64_t seed, std::ostream* trace = nullptr);

std::string empirical_to_csv(const EmpiricalStats& stats);

}  // namespace ccmkt
