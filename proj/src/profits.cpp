#include "ccmkt/profits.hpp"

#include <cmath>

#include "ccmkt/errors.hpp"

namespace ccmkt {

namespace {

// probability-weighted running moments; immune to cancellation on flat series
struct Moments {
  double wsum = 0.0, mean = 0.0, m2 = 0.0;
  void add(double w, double x) {
    wsum += w;
    double delta = x - mean;
    mean += (w / wsum) * delta;
    m2 += w * delta * (x - mean);
  }
  double spread() const { return wsum > 0.0 ? std::sqrt(std::max(0.0, m2 / wsum)) : 0.0; }
};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

OperatorProfit cco_operator_profit(const MarketCase& c, const CcoSolution& sol,
                                   const PriceSchedule& prices,
                                   const ProfitOptions& opts) {
  const int B = c.num_buses();
  OperatorProfit out{};
  double gamma1 = 0.0;
  for (int n = 0; n < B; ++n) {
    double sched_net = 0.0;
    for (int j : c.loads_at(n)) sched_net += c.loads[j].demand;
    for (int i : c.generators_at(n)) sched_net -= sol.p[i];
    sched_net -= sol.w_sch[n];
    gamma1 += sol.lambda[n] * sched_net;
    double real_net = c.forecast_at(n) - sol.w_sch[n] - sol.w_spi[n];
    for (int i : c.generators_at(n)) real_net += sol.r_up[i] - sol.r_dn[i];
    for (int j : c.loads_at(n)) real_net += sol.s[j];
    gamma1 -= sol.nu[n] * real_net;
  }
  double gamma2 = 0.0;
  for (int n = 0; n < B; ++n) {
    double bus_term = 0.0;
    for (int i : c.generators_at(n))
      bus_term += prices.tau_up[i] * sol.r_up[i] + prices.tau_dn[i] * sol.r_dn[i];
    bus_term -= (sol.y_spill[n] - sol.x_spill[n]) * (c.forecast_at(n) - sol.w_spi[n]);
    gamma2 -= bus_term;
  }
  double served = 0.0;
  for (int j = 0; j < c.num_loads(); ++j) served += c.loads[j].demand - sol.s[j];
  gamma2 += prices.zeta * served;

  // congestion subproblem objective evaluated at the optimal angles
  double z = 0.0;
  for (size_t k = 0; k < sol.index.directed_from.size(); ++k) {
    int a = sol.index.directed_from[k];
    int b = sol.index.directed_to[k];
    double bkl = sol.index.directed_b[k];
    z += sol.lambda[a] * bkl * (sol.delta0[a] - sol.delta0[b]);
    z -= sol.nu[a] * bkl * (sol.delta0[a] - sol.delta[a] - sol.delta0[b] + sol.delta[b]);
  }

  out.gamma1 = gamma1;
  out.gamma2 = gamma2;
  out.z_saddle = z;
  out.profit = gamma1 + gamma2;
  double var = 0.0;
  for (int n = 0; n < B; ++n) {
    double sigma = c.sigma_at(n);
    if (sigma <= 0.0) continue;
    double inner = 0.0;
    for (int i : c.generators_at(n))
      inner += sol.a_up[i] * (sol.nu[n] + prices.tau_up[i]) +
               sol.a_dn[i] * (sol.nu[n] - prices.tau_dn[i]);
    inner -= (sol.nu[n] - sol.y_spill[n] + sol.x_spill[n]) * (1.0 - sol.beta[n]);
    for (int j : c.loads_at(n)) inner += sol.gamma[j] * (sol.nu[n] + prices.zeta);
    var += sigma * sigma * inner * inner;
  }
  out.stddev = std::sqrt(var);

  if (opts.enforce) {
    double scale = 1.0 + std::abs(gamma1);
    if (std::abs(gamma2) > opts.tol * scale)
      throw AdequacyError("operator profit split is inconsistent: second term " +
                          fmt(gamma2) + " should vanish");
    if (std::abs(gamma1 + z) > opts.tol * scale)
      throw AdequacyError("operator profit does not match the congestion rent: " +
                          fmt(gamma1) + " vs " + fmt(-z));
    if (out.profit < -opts.tol * scale)
      throw AdequacyError("operator expected profit is negative: " + fmt(out.profit));
  }
  return out;
}

void cco_vres_profit(const MarketCase& c, const CcoSolution& sol,
                     const PriceSchedule& prices, std::vector<double>& profit,
                     std::vector<double>& stddev, const ProfitOptions& opts) {
  (void)prices;
  const int B = c.num_buses();
  profit.assign(B, 0.0);
  stddev.assign(B, 0.0);
  for (int n = 0; n < B; ++n) {
    double margin = -c.vres_cost_at(n) + sol.nu[n] - sol.y_spill[n] + sol.x_spill[n];
    profit[n] = sol.mu[n] * sol.w_sch[n] + margin * c.forecast_at(n);
    stddev[n] = std::abs(margin * (1.0 - sol.beta[n])) * c.sigma_at(n);
    if (opts.enforce && profit[n] < -opts.tol)
      throw AdequacyError("VRES cost recovery failed at bus " + c.buses[n] + ": " +
                          fmt(profit[n]));
  }
}

void cco_generator_profit(const MarketCase& c, const CcoSolution& sol,
                          const PriceSchedule& prices, std::vector<double>& profit,
                          std::vector<double>& stddev, std::vector<double>& part1,
                          std::vector<double>& part2, const ProfitOptions& opts) {
  const int I = c.num_generators();
  profit.assign(I, 0.0);
  stddev.assign(I, 0.0);
  part1.assign(I, 0.0);
  part2.assign(I, 0.0);
  for (int i = 0; i < I; ++i) {
    const auto& g = c.generators[i];
    int n = c.bus_index(g.bus);
    part1[i] = -g.energy_cost * sol.p[i] - g.up_cost * sol.r_up[i] +
               g.down_saving * sol.r_dn[i] + sol.lambda[n] * sol.p[i] +
               sol.nu[n] * (sol.r_up[i] - sol.r_dn[i]);
    part2[i] = prices.tau_up[i] * sol.r_up[i] + prices.tau_dn[i] * sol.r_dn[i];
    profit[i] = part1[i] + part2[i];
    stddev[i] = std::abs(sol.a_up[i] * (g.up_cost - sol.nu[n] - prices.tau_up[i]) +
                         sol.a_dn[i] * (g.down_saving - sol.nu[n] + prices.tau_dn[i])) *
                c.sigma_at(n);
    if (opts.enforce && profit[i] < -opts.tol)
      throw AdequacyError("generator cost recovery failed for " + g.id + ": " +
                          fmt(profit[i]));
  }
}

void cco_consumer_surplus(const MarketCase& c, const CcoSolution& sol,
                          const PriceSchedule& prices, std::vector<double>& surplus,
                          std::vector<double>& stddev) {
  const int J = c.num_loads();
  surplus.assign(J, 0.0);
  stddev.assign(J, 0.0);
  for (int j = 0; j < J; ++j) {
    int n = c.bus_index(c.loads[j].bus);
    surplus[j] = (sol.nu[n] + prices.zeta) * sol.s[j] -
                 (sol.lambda[n] + prices.zeta) * c.loads[j].demand;
    stddev[j] = std::abs(sol.nu[n] + prices.zeta) * sol.gamma[j] * c.sigma_at(n);
  }
}

ProfitReport cco_profit_report(const MarketCase& c, const CcoSolution& sol,
                               const PriceSchedule& prices, const ProfitOptions& opts) {
  ProfitReport r;
  OperatorProfit op = cco_operator_profit(c, sol, prices, opts);
  r.operator_profit = op.profit;
  r.operator_std = op.stddev;
  r.gamma1 = op.gamma1;
  r.gamma2 = op.gamma2;
  r.z_saddle = op.z_saddle;
  cco_vres_profit(c, sol, prices, r.vres_profit, r.vres_std, opts);
  cco_generator_profit(c, sol, prices, r.gen_profit, r.gen_std, r.gen_part1,
                       r.gen_part2, opts);
  cco_consumer_surplus(c, sol, prices, r.load_surplus, r.load_std);
  return r;
}

SoProfitReport so_profits(const MarketCase& c, const SoSolution& sol,
                          const ScenarioSet& sc, const SoPriceSchedule& prices,
                          const ProfitOptions& opts) {
  const int B = c.num_buses(), I = c.num_generators(), J = c.num_loads();
  const int W = sc.count;
  const bool keep = W <= 10000;  // stream larger sets instead of storing
  SoProfitReport r;
  if (keep) {
    r.imbalance_a.assign(B, std::vector<double>(W, 0.0));
    r.vres_margin_b.assign(B, std::vector<double>(W, 0.0));
    r.gen_margin_d.assign(I, std::vector<double>(W, 0.0));
  }

  double sched_term = 0.0;
  for (int n = 0; n < B; ++n) {
    double net = 0.0;
    for (int i : c.generators_at(n)) net += sol.p[i];
    net += sol.w_sch[n];
    for (int j : c.loads_at(n)) net -= c.loads[j].demand;
    sched_term -= sol.lambda[n] * net;
  }
  double op_linear = 0.0;
  Moments op_m;
  std::vector<Moments> b_m(B), d_m(I), l_m(J);
  for (int w = 0; w < W; ++w) {
    double pi = sc.probability[w];
    double op_term = 0.0;
    for (int n = 0; n < B; ++n) {
      double a = 0.0;
      for (int i : c.generators_at(n)) a += sol.r_up[w][i] - sol.r_dn[w][i];
      a -= sol.w_spi[w][n] + sol.w_sch[n] - sc.w[w][n];
      for (int j : c.loads_at(n)) a += sol.s[w][j];
      if (keep) r.imbalance_a[n][w] = a;
      op_linear -= sol.nu[w][n] * a;
      op_term += (sol.nu[w][n] / pi) * a;

      double b = (sol.nu[w][n] / pi) * (sc.w[w][n] - sol.w_sch[n] - sol.w_spi[w][n]) -
                 c.vres_cost_at(n) * (sc.w[w][n] - sol.w_spi[w][n]);
      if (keep) r.vres_margin_b[n][w] = b;
      b_m[n].add(pi, b);
    }
    op_m.add(pi, op_term);
    for (int i = 0; i < I; ++i) {
      int n = c.bus_index(c.generators[i].bus);
      double price = sol.nu[w][n] / pi;
      double d = (price - c.generators[i].up_cost) * sol.r_up[w][i] -
                 (price - c.generators[i].down_saving) * sol.r_dn[w][i];
      if (keep) r.gen_margin_d[i][w] = d;
      d_m[i].add(pi, d);
    }
    for (int j = 0; j < J; ++j) {
      int n = c.bus_index(c.loads[j].bus);
      double v = (sol.nu[w][n] / pi) * sol.s[w][j];
      l_m[j].add(pi, v);
    }
  }
  r.operator_profit = sched_term + op_linear;
  // the schedule term is deterministic; only the rebalance term fluctuates
  r.operator_std = op_m.spread();
  r.vres_profit.resize(B);
  r.vres_std.resize(B);
  for (int n = 0; n < B; ++n) {
    r.vres_profit[n] = sol.lambda[n] * sol.w_sch[n] + b_m[n].mean;
    r.vres_std[n] = b_m[n].spread();
  }
  r.gen_profit.resize(I);
  r.gen_std.resize(I);
  for (int i = 0; i < I; ++i) {
    int n = c.bus_index(c.generators[i].bus);
    r.gen_profit[i] =
        (sol.lambda[n] - c.generators[i].energy_cost) * sol.p[i] + d_m[i].mean;
    r.gen_std[i] = d_m[i].spread();
  }
  r.load_surplus.resize(J);
  r.load_std.resize(J);
  for (int j = 0; j < J; ++j) {
    int n = c.bus_index(c.loads[j].bus);
    double charged = sol.lambda[n] * c.loads[j].demand;
    r.load_surplus[j] = l_m[j].mean - charged;
    r.load_std[j] = l_m[j].spread();
  }
  (void)prices;

  if (opts.enforce) {
    double scale = 1.0 + std::abs(r.operator_profit);
    if (r.operator_profit < -opts.tol * scale)
      throw AdequacyError("SO operator expected profit is negative: " +
                          fmt(r.operator_profit));
    for (int n = 0; n < B; ++n)
      if (r.vres_profit[n] < -opts.tol)
        throw AdequacyError("SO VRES cost recovery failed at bus " + c.buses[n] + ": " +
                            fmt(r.vres_profit[n]));
    for (int i = 0; i < I; ++i)
      if (r.gen_profit[i] < -opts.tol)
        throw AdequacyError("SO generator cost recovery failed for " +
                            c.generators[i].id + ": " + fmt(r.gen_profit[i]));
  }
  return r;
}

AdequacyReport adequacy_report(const MarketCase& c, const ProfitReport& cco,
                               const SoProfitReport* so, double tol) {
  AdequacyReport rep;
  auto add = [&](const std::string& name, double margin) {
    bool pass = margin >= -tol;
    rep.rows.push_back({name, margin, pass});
    rep.all_pass = rep.all_pass && pass;
  };
  add("operator", cco.operator_profit);
  for (int n = 0; n < c.num_buses(); ++n)
    if (c.has_vres(n)) add("vres@" + c.buses[n], cco.vres_profit[n]);
  for (int i = 0; i < c.num_generators(); ++i)
    add("generator " + c.generators[i].id, cco.gen_profit[i]);
  if (so) {
    add("so operator", so->operator_profit);
    for (int n = 0; n < c.num_buses(); ++n)
      if (c.has_vres(n)) add("so vres@" + c.buses[n], so->vres_profit[n]);
    for (int i = 0; i < c.num_generators(); ++i)
      add("so generator " + c.generators[i].id, so->gen_profit[i]);
  }
  return rep;
}

}  // namespace ccmkt
