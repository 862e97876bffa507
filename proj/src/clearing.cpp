#include "ccmkt/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ccmkt/errors.hpp"

namespace ccmkt {

using lp::LpProblem;
using lp::LpSolution;
using lp::RowSense;
using lp::SolveStatus;
using lp::VarBound;

// ---------------------------------------------------------------------------
// Distribution machinery
// ---------------------------------------------------------------------------

double normal_quantile(double p) {
  // Wichura's PPND16 rational approximations
  if (!(p > 0.0 && p < 1.0))
    throw ValidationError({"normal quantile needs a probability in (0,1)"});
  const double q = p - 0.5;
  double r, val;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    val = q *
          (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
              1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
            1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
          (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
              5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
            4.2313330701600911252e+1) * r + 1.0);
    return val;
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

double standardized_quantile(const DistributionFamily& family, double prob) {
  if (!(prob > 0.5 && prob < 1.0))
    throw ValidationError({"standardized quantile needs a probability in (0.5, 1)"});
  switch (family.kind) {
    case DistributionKind::Normal:
      return normal_quantile(prob);
    case DistributionKind::UniformSymmetric:
      // uniform on [-sqrt(3), sqrt(3)] has unit variance
      return std::sqrt(3.0) * (2.0 * prob - 1.0);
    case DistributionKind::CustomTable: {
      const auto& t = family.quantile_table;
      if (t.size() < 2) throw ValidationError({"custom quantile table too small"});
      if (prob < t.front().first || prob > t.back().first)
        throw ValidationError({"probability outside the custom quantile table"});
      for (size_t k = 1; k < t.size(); ++k) {
        if (prob <= t[k].first) {
          double w = (prob - t[k - 1].first) / (t[k].first - t[k - 1].first);
          return t[k - 1].second + w * (t[k].second - t[k - 1].second);
        }
      }
      return t.back().second;
    }
  }
  throw ValidationError({"unknown distribution family"});
}

QuantileSpec make_quantile_spec(const DistributionFamily& family, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw ValidationError({"epsilon must lie strictly between 0 and 0.5"});
  QuantileSpec spec;
  spec.family = family;
  spec.epsilon = epsilon;
  spec.q = standardized_quantile(family, 1.0 - epsilon);
  return spec;
}

// ---------------------------------------------------------------------------
// LP builders
// ---------------------------------------------------------------------------

namespace {

std::string key(const std::string& prefix, const std::string& id) {
  return prefix + "_" + id;
}

// Directed line expansion: each stored unordered pair yields both
// orientations, each with its own capacity row.
void expand_lines(const MarketCase& c, ModelIndex& ix) {
  for (const auto& l : c.lines) {
    int a = c.bus_index(l.from), b = c.bus_index(l.to);
    ix.directed_from.push_back(a);
    ix.directed_to.push_back(b);
    ix.directed_b.push_back(l.susceptance);
    ix.directed_cap.push_back(l.capacity);
    ix.directed_from.push_back(b);
    ix.directed_to.push_back(a);
    ix.directed_b.push_back(l.susceptance);
    ix.directed_cap.push_back(l.capacity);
  }
}

struct BuilderMode {
  bool chance = false;                   // emit recourse columns + quantile terms
  std::span<const double> realized_w{};  // nominal mode: known VRES outcome
  double q = 0.0;
};

BuiltLp build_market_lp(const MarketCase& c, const BuilderMode& mode) {
  const int B = c.num_buses();
  const int I = c.num_generators();
  const int J = c.num_loads();
  BuiltLp out;
  LpProblem& pb = out.lp;
  ModelIndex& ix = out.index;
  pb.name = mode.chance ? "dcco" : "nominal";
  ix.q = mode.q;
  expand_lines(c, ix);

  auto wind_at = [&](int n) {
    return mode.chance ? c.forecast_at(n) : mode.realized_w[n];
  };

  ix.p.resize(I);
  ix.r_up.resize(I);
  ix.r_dn.resize(I);
  for (int i = 0; i < I; ++i) {
    const auto& g = c.generators[i];
    ix.p[i] = pb.add_column(key("p", g.id), g.energy_cost);
    ix.r_up[i] = pb.add_column(key("ru", g.id), g.up_cost);
    ix.r_dn[i] = pb.add_column(key("rd", g.id), -g.down_saving);
  }
  if (mode.chance) {
    ix.a_up.resize(I);
    ix.a_dn.resize(I);
    for (int i = 0; i < I; ++i) {
      ix.a_up[i] = pb.add_column(key("au", c.generators[i].id), 0.0);
      ix.a_dn[i] = pb.add_column(key("ad", c.generators[i].id), 0.0);
    }
  }
  ix.w_sch.resize(B);
  ix.w_spi.resize(B);
  ix.delta0.resize(B);
  ix.delta.resize(B);
  if (mode.chance) ix.beta.resize(B);
  for (int n = 0; n < B; ++n) {
    ix.w_sch[n] = pb.add_column(key("wsch", c.buses[n]), 0.0);
    ix.w_spi[n] = pb.add_column(key("wspi", c.buses[n]), -c.vres_cost_at(n));
    if (mode.chance) ix.beta[n] = pb.add_column(key("beta", c.buses[n]), 0.0);
    ix.delta0[n] = pb.add_column(key("d0", c.buses[n]), 0.0, VarBound::Free);
    ix.delta[n] = pb.add_column(key("dr", c.buses[n]), 0.0, VarBound::Free);
  }
  ix.s.resize(J);
  if (mode.chance) ix.gamma.resize(J);
  for (int j = 0; j < J; ++j) {
    const auto& l = c.loads[j];
    if (mode.chance) ix.gamma[j] = pb.add_column(key("gamma", l.id), 0.0);
    ix.s[j] = pb.add_column(key("s", l.id), l.curtail_cost);
  }
  double constant = 0.0;
  for (int n = 0; n < B; ++n) constant += c.vres_cost_at(n) * wind_at(n);
  pb.cost_constant = constant;

  const int L = static_cast<int>(ix.directed_from.size());
  std::vector<double> qsig(B, 0.0);
  for (int n = 0; n < B; ++n) qsig[n] = mode.chance ? mode.q * c.sigma_at(n) : 0.0;

  // scheduling balance
  ix.balance.resize(B);
  for (int n = 0; n < B; ++n) {
    std::vector<std::pair<int, double>> row;
    for (int i : c.generators_at(n)) row.push_back({ix.p[i], 1.0});
    row.push_back({ix.w_sch[n], 1.0});
    for (int k = 0; k < L; ++k) {
      if (ix.directed_from[k] == n) {
        row.push_back({ix.delta0[n], -ix.directed_b[k]});
        row.push_back({ix.delta0[ix.directed_to[k]], ix.directed_b[k]});
      }
    }
    double rhs = 0;
    for (int j : c.loads_at(n)) rhs += c.loads[j].demand;
    ix.balance[n] = pb.add_row(key("bal", c.buses[n]), RowSense::Equal, rhs, std::move(row));
  }
  // real-time rebalance
  ix.rebalance.resize(B);
  for (int n = 0; n < B; ++n) {
    std::vector<std::pair<int, double>> row;
    for (int i : c.generators_at(n)) {
      row.push_back({ix.r_up[i], 1.0});
      row.push_back({ix.r_dn[i], -1.0});
    }
    for (int j : c.loads_at(n)) row.push_back({ix.s[j], 1.0});
    row.push_back({ix.w_sch[n], -1.0});
    row.push_back({ix.w_spi[n], -1.0});
    for (int k = 0; k < L; ++k) {
      if (ix.directed_from[k] == n) {
        row.push_back({ix.delta0[n], ix.directed_b[k]});
        row.push_back({ix.delta[n], -ix.directed_b[k]});
        row.push_back({ix.delta0[ix.directed_to[k]], -ix.directed_b[k]});
        row.push_back({ix.delta[ix.directed_to[k]], ix.directed_b[k]});
      }
    }
    ix.rebalance[n] =
        pb.add_row(key("rebal", c.buses[n]), RowSense::Equal, -wind_at(n), std::move(row));
  }
  // recourse budget per uncertain bus
  if (mode.chance) {
    ix.control.assign(B, -1);
    for (int n = 0; n < B; ++n) {
      if (c.sigma_at(n) <= 0.0) continue;
      std::vector<std::pair<int, double>> row;
      for (int i : c.generators_at(n)) {
        row.push_back({ix.a_up[i], 1.0});
        row.push_back({ix.a_dn[i], 1.0});
      }
      for (int j : c.loads_at(n)) row.push_back({ix.gamma[j], 1.0});
      row.push_back({ix.beta[n], 1.0});
      ix.control[n] = pb.add_row(key("ctrl", c.buses[n]), RowSense::Equal, 1.0, std::move(row));
    }
  } else {
    ix.control.assign(B, -1);
  }
  // line capacities, both stages
  ix.line_sched.resize(L);
  ix.line_real.resize(L);
  for (int k = 0; k < L; ++k) {
    int a = ix.directed_from[k], b = ix.directed_to[k];
    double bkl = ix.directed_b[k];
    std::string suffix = c.buses[a] + "_" + c.buses[b];
    ix.line_sched[k] = pb.add_row(key("line0", suffix), RowSense::GreaterEqual,
                                  -ix.directed_cap[k],
                                  {{ix.delta0[a], -bkl}, {ix.delta0[b], bkl}});
    ix.line_real[k] = pb.add_row(key("liner", suffix), RowSense::GreaterEqual,
                                 -ix.directed_cap[k],
                                 {{ix.delta[a], -bkl}, {ix.delta[b], bkl}});
  }
  // schedule caps
  ix.w_cap.resize(B);
  for (int n = 0; n < B; ++n)
    ix.w_cap[n] = pb.add_row(key("wcap", c.buses[n]), RowSense::GreaterEqual,
                             -c.schedule_cap_at(n), {{ix.w_sch[n], -1.0}});
  ix.p_cap.resize(I);
  for (int i = 0; i < I; ++i)
    ix.p_cap[i] = pb.add_row(key("pcap", c.generators[i].id), RowSense::GreaterEqual,
                             -c.generators[i].capacity, {{ix.p[i], -1.0}});
  // spill band
  ix.spill_lo.assign(B, -1);
  ix.spill_hi.resize(B);
  for (int n = 0; n < B; ++n) {
    if (mode.chance) {
      ix.spill_lo[n] = pb.add_row(key("spl_lo", c.buses[n]), RowSense::GreaterEqual, 0.0,
                                  {{ix.w_spi[n], 1.0}, {ix.beta[n], -qsig[n]}});
      ix.spill_hi[n] = pb.add_row(key("spl_hi", c.buses[n]), RowSense::GreaterEqual,
                                  -c.forecast_at(n) + qsig[n],
                                  {{ix.w_spi[n], -1.0}, {ix.beta[n], qsig[n]}});
    } else {
      ix.spill_hi[n] = pb.add_row(key("spl_hi", c.buses[n]), RowSense::GreaterEqual,
                                  -wind_at(n), {{ix.w_spi[n], -1.0}});
    }
  }
  // reserve bands
  ix.ru_lo.assign(I, -1);
  ix.ru_hi.resize(I);
  ix.rd_lo.assign(I, -1);
  ix.rd_hi.resize(I);
  for (int i = 0; i < I; ++i) {
    const auto& g = c.generators[i];
    int n = c.bus_index(g.bus);
    if (mode.chance) {
      ix.ru_lo[i] = pb.add_row(key("ru_lo", g.id), RowSense::GreaterEqual, 0.0,
                               {{ix.r_up[i], 1.0}, {ix.a_up[i], -qsig[n]}});
      ix.ru_hi[i] = pb.add_row(key("ru_hi", g.id), RowSense::GreaterEqual, -g.max_up_reserve,
                               {{ix.r_up[i], -1.0}, {ix.a_up[i], -qsig[n]}});
      ix.rd_lo[i] = pb.add_row(key("rd_lo", g.id), RowSense::GreaterEqual, 0.0,
                               {{ix.r_dn[i], 1.0}, {ix.a_dn[i], -qsig[n]}});
      ix.rd_hi[i] = pb.add_row(key("rd_hi", g.id), RowSense::GreaterEqual, -g.max_down_reserve,
                               {{ix.r_dn[i], -1.0}, {ix.a_dn[i], -qsig[n]}});
    } else {
      ix.ru_hi[i] = pb.add_row(key("ru_hi", g.id), RowSense::GreaterEqual,
                               -g.max_up_reserve, {{ix.r_up[i], -1.0}});
      ix.rd_hi[i] = pb.add_row(key("rd_hi", g.id), RowSense::GreaterEqual,
                               -g.max_down_reserve, {{ix.r_dn[i], -1.0}});
    }
  }
  // generation band
  ix.band_lo.resize(I);
  ix.band_hi.resize(I);
  for (int i = 0; i < I; ++i) {
    const auto& g = c.generators[i];
    int n = c.bus_index(g.bus);
    std::vector<std::pair<int, double>> lo = {
        {ix.p[i], 1.0}, {ix.r_up[i], 1.0}, {ix.r_dn[i], -1.0}};
    std::vector<std::pair<int, double>> hi = {
        {ix.p[i], -1.0}, {ix.r_up[i], -1.0}, {ix.r_dn[i], 1.0}};
    if (mode.chance) {
      lo.push_back({ix.a_up[i], -qsig[n]});
      lo.push_back({ix.a_dn[i], -qsig[n]});
      hi.push_back({ix.a_up[i], -qsig[n]});
      hi.push_back({ix.a_dn[i], -qsig[n]});
    }
    ix.band_lo[i] =
        pb.add_row(key("band_lo", g.id), RowSense::GreaterEqual, 0.0, std::move(lo));
    ix.band_hi[i] = pb.add_row(key("band_hi", g.id), RowSense::GreaterEqual,
                               -g.capacity, std::move(hi));
  }
  // curtailment band
  ix.curt_lo.assign(J, -1);
  ix.curt_hi.resize(J);
  for (int j = 0; j < J; ++j) {
    const auto& l = c.loads[j];
    int n = c.bus_index(l.bus);
    if (mode.chance) {
      ix.curt_lo[j] = pb.add_row(key("curt_lo", l.id), RowSense::GreaterEqual, 0.0,
                                 {{ix.s[j], 1.0}, {ix.gamma[j], -qsig[n]}});
      ix.curt_hi[j] = pb.add_row(key("curt_hi", l.id), RowSense::GreaterEqual, -l.demand,
                                 {{ix.s[j], -1.0}, {ix.gamma[j], -qsig[n]}});
    } else {
      ix.curt_hi[j] = pb.add_row(key("curt_hi", l.id), RowSense::GreaterEqual,
                                 -l.demand, {{ix.s[j], -1.0}});
    }
  }
  // reference-bus pins
  int ref = c.bus_index(c.reference_bus);
  ix.ref_sched = pb.add_row("ref0", RowSense::Equal, 0.0, {{ix.delta0[ref], 1.0}});
  ix.ref_real = pb.add_row("refr", RowSense::Equal, 0.0, {{ix.delta[ref], 1.0}});
  // recourse pins at certain buses
  if (mode.chance) {
    for (int n = 0; n < B; ++n) {
      if (c.sigma_at(n) > 0.0) continue;
      for (int i : c.generators_at(n)) {
        pb.add_row(key("pin_au", c.generators[i].id), RowSense::Equal, 0.0,
                   {{ix.a_up[i], 1.0}});
        pb.add_row(key("pin_ad", c.generators[i].id), RowSense::Equal, 0.0,
                   {{ix.a_dn[i], 1.0}});
        ix.pin_rows += 2;
      }
      pb.add_row(key("pin_beta", c.buses[n]), RowSense::Equal, 0.0, {{ix.beta[n], 1.0}});
      ix.pin_rows += 1;
      for (int j : c.loads_at(n)) {
        pb.add_row(key("pin_gamma", c.loads[j].id), RowSense::Equal, 0.0,
                   {{ix.gamma[j], 1.0}});
        ix.pin_rows += 1;
      }
    }
  }
  pb.validate();
  return out;
}

}  // namespace

BuiltLp build_nominal(const MarketCase& c, std::span<const double> realized_w) {
  if (static_cast<int>(realized_w.size()) != c.num_buses())
    throw ValidationError({"realized VRES vector must have one entry per bus"});
  for (double w : realized_w)
    if (!(std::isfinite(w) && w >= 0.0))
      throw ValidationError({"realized VRES power must be finite and >= 0"});
  BuilderMode mode;
  mode.chance = false;
  mode.realized_w = realized_w;
  return build_market_lp(c, mode);
}

BuiltLp build_dcco(const MarketCase& c) {
  BuilderMode mode;
  mode.chance = true;
  mode.q = make_quantile_spec(c.distribution, c.epsilon).q;
  return build_market_lp(c, mode);
}

// ---------------------------------------------------------------------------
// CCO solve
// ---------------------------------------------------------------------------

CcoSolution solve_cco(const MarketCase& c, const CcoSolveOptions& opts) {
  BuiltLp built = build_dcco(c);
  const ModelIndex& ix = built.index;
  const int B = c.num_buses(), I = c.num_generators(), J = c.num_loads();

  lp::SolverConfig cfg = opts.lp;
  if (opts.canonical_primal) {
    // deterministic vertex on the optimal face: schedule as much VRES as
    // possible, lean recourse on the downward side, curtail through as few
    // response coefficients as possible, and dispatch cheap energy first
    std::vector<double> max_vres(built.lp.num_cols(), 0.0);
    for (int n = 0; n < B; ++n) max_vres[ix.w_sch[n]] = -1.0;
    std::vector<double> min_alpha_up(built.lp.num_cols(), 0.0);
    for (int i = 0; i < I; ++i) min_alpha_up[ix.a_up[i]] = 1.0;
    std::vector<double> min_gamma(built.lp.num_cols(), 0.0);
    for (int j = 0; j < J; ++j) min_gamma[ix.gamma[j]] = 1.0;
    std::vector<double> cheap_energy(built.lp.num_cols(), 0.0);
    for (int i = 0; i < I; ++i) cheap_energy[ix.p[i]] = c.generators[i].energy_cost;
    cfg.secondary_costs = {std::move(max_vres), std::move(min_alpha_up),
                           std::move(min_gamma), std::move(cheap_energy)};
  }
  LpSolution sol = lp::solve_lp(built.lp, cfg);
  if (sol.status == SolveStatus::Infeasible)
    throw ModelInfeasibleError("chance-constrained market model is infeasible");
  if (sol.status != SolveStatus::Optimal)
    throw SolverError("chance-constrained market model did not solve to optimality");

  if (opts.canonical_dual) {
    LpProblem dual_lp = lp::dual_of(built.lp);
    lp::SolverConfig dcfg = opts.lp;
    std::vector<double> d(dual_lp.num_cols(), 0.0);
    // spill-floor duals are only bounded (and only priced) where VRES exists
    for (int n = 0; n < B; ++n)
      if (ix.spill_lo[n] >= 0 && c.has_vres(n) && c.forecast_at(n) > 0.0)
        d[ix.spill_lo[n]] = -1.0;
    for (int i = 0; i < I; ++i) {
      if (ix.ru_lo[i] >= 0) d[ix.ru_lo[i]] = 1.0;  // keep reserve floors cheap
      if (ix.rd_lo[i] >= 0) d[ix.rd_lo[i]] = 1.0;
    }
    dcfg.secondary_costs = {std::move(d)};
    LpSolution dsol = lp::solve_lp(dual_lp, dcfg);
    if (dsol.status != SolveStatus::Optimal)
      throw SolverError("dual of the market model did not solve to optimality");
    double primal_val = sol.objective - built.lp.cost_constant;
    if (std::abs(-dsol.objective - primal_val) > 1e-6 * (1.0 + std::abs(primal_val)))
      throw SolverError("primal/dual objective mismatch during price refinement");
    sol.dual = dsol.primal;
  }

  CcoSolution out;
  out.index = ix;
  out.epsilon = c.epsilon;
  out.q = ix.q;
  out.objective = sol.objective;
  out.lp_rows = built.lp.num_rows();
  out.lp_cols = built.lp.num_cols();
  out.kkt = lp::check_kkt(built.lp, sol);
  if (!out.kkt.pass(opts.tol))
    throw SolverError("market solution failed its optimality certificate");

  auto pick = [&](const std::vector<int>& idx, const std::vector<double>& from) {
    std::vector<double> v(idx.size(), 0.0);
    for (size_t k = 0; k < idx.size(); ++k) v[k] = idx[k] >= 0 ? from[idx[k]] : 0.0;
    return v;
  };
  out.p = pick(ix.p, sol.primal);
  out.r_up = pick(ix.r_up, sol.primal);
  out.r_dn = pick(ix.r_dn, sol.primal);
  out.a_up = pick(ix.a_up, sol.primal);
  out.a_dn = pick(ix.a_dn, sol.primal);
  out.w_sch = pick(ix.w_sch, sol.primal);
  out.w_spi = pick(ix.w_spi, sol.primal);
  out.beta = pick(ix.beta, sol.primal);
  out.delta0 = pick(ix.delta0, sol.primal);
  out.delta = pick(ix.delta, sol.primal);
  out.gamma = pick(ix.gamma, sol.primal);
  out.s = pick(ix.s, sol.primal);
  out.lambda = pick(ix.balance, sol.dual);
  out.nu = pick(ix.rebalance, sol.dual);
  out.kappa = pick(ix.control, sol.dual);
  out.mu = pick(ix.w_cap, sol.dual);
  out.y_spill = pick(ix.spill_lo, sol.dual);
  out.x_spill = pick(ix.spill_hi, sol.dual);
  out.rho = pick(ix.p_cap, sol.dual);
  out.y_up = pick(ix.ru_lo, sol.dual);
  out.x_up = pick(ix.ru_hi, sol.dual);
  out.y_dn = pick(ix.rd_lo, sol.dual);
  out.x_dn = pick(ix.rd_hi, sol.dual);
  out.y_band = pick(ix.band_lo, sol.dual);
  out.x_band = pick(ix.band_hi, sol.dual);
  out.y_curt = pick(ix.curt_lo, sol.dual);
  out.x_curt = pick(ix.curt_hi, sol.dual);
  out.eta_sched = pick(ix.line_sched, sol.dual);
  out.eta_real = pick(ix.line_real, sol.dual);
  out.sigma_prime.resize(I);
  for (int i = 0; i < I; ++i)
    out.sigma_prime[i] = ix.q * c.sigma_at(c.bus_index(c.generators[i].bus));

  double served = 0.0;
  for (int j = 0; j < J; ++j) served += c.loads[j].demand - out.s[j];
  if (served <= opts.tol)
    throw AssumptionViolationError(
        "no power is dispatched to loads; the load-price adder is undefined");
  return out;
}

// ---------------------------------------------------------------------------
// Scenario machinery
// ---------------------------------------------------------------------------

namespace {

uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double counter_uniform(uint64_t seed, uint64_t index, uint64_t stream) {
  uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ index) ^ (stream * 0x9e3779b97f4a7c15ULL + 1));
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

ScenarioSet sample_scenarios(const MarketCase& c, int count, uint64_t seed) {
  if (count < 1) throw ValidationError({"scenario count must be >= 1"});
  ScenarioSet s;
  s.count = count;
  s.seed = seed;
  s.probability.assign(count, 1.0 / count);
  s.w.assign(count, std::vector<double>(c.num_buses(), 0.0));
  for (int w = 0; w < count; ++w) {
    for (int n = 0; n < c.num_buses(); ++n) {
      double sigma = c.sigma_at(n);
      double mean = c.forecast_at(n);
      if (sigma <= 0.0) {
        s.w[w][n] = mean;
        continue;
      }
      double u = counter_uniform(seed, static_cast<uint64_t>(w), static_cast<uint64_t>(n));
      double draw = mean + sigma * normal_quantile(u);
      s.w[w][n] = std::max(0.0, draw);  // physical power cannot go negative
    }
  }
  return s;
}

std::string scenarios_to_csv(const MarketCase& c, const ScenarioSet& s) {
  std::string out = "scenario,probability";
  for (const auto& b : c.buses) out += ",W_" + b;
  out += "\n";
  char buf[64];
  for (int w = 0; w < s.count; ++w) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g", w, s.probability[w]);
    out += buf;
    for (int n = 0; n < c.num_buses(); ++n) {
      std::snprintf(buf, sizeof(buf), ",%.12g", s.w[w][n]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// SO model
// ---------------------------------------------------------------------------

namespace {

// Shared row layout between the assembled LP and the per-scenario
// subproblem. First-stage rows come first, then one block per scenario.
struct SoLayout {
  int B = 0, I = 0, J = 0, L = 0;
  int m_first = 0;   // first-stage rows
  int m_block = 0;   // rows per scenario block
  int n_first = 0;   // first-stage columns
  int n_block = 0;   // columns per scenario block

  // offsets inside a scenario block
  int r_rebal = 0, r_liner = 0, r_spill = 0, r_ru = 0, r_rd = 0, r_blo = 0,
      r_bhi = 0, r_curt = 0, r_ref = 0;
  // offsets inside the block column group
  int c_ru = 0, c_rd = 0, c_s = 0, c_wspi = 0, c_delta = 0;

  explicit SoLayout(const MarketCase& c, int directed_lines) {
    B = c.num_buses();
    I = c.num_generators();
    J = c.num_loads();
    L = directed_lines;
    m_first = B + L + B + I + 1;  // balance, line0, wcap, pcap, ref0
    r_rebal = 0;
    r_liner = r_rebal + B;
    r_spill = r_liner + L;
    r_ru = r_spill + B;
    r_rd = r_ru + I;
    r_blo = r_rd + I;
    r_bhi = r_blo + I;
    r_curt = r_bhi + I;
    r_ref = r_curt + J;
    m_block = r_ref + 1;
    n_first = I + 2 * B;
    c_ru = 0;
    c_rd = c_ru + I;
    c_s = c_rd + I;
    c_wspi = c_s + J;
    c_delta = c_wspi + B;
    n_block = c_delta + B;
  }
};

// Coupling entries of one scenario block: (block row, first-stage column,
// coefficient as it appears in the assembled LP).
struct SoCoupling {
  std::vector<std::tuple<int, int, double>> entries;
};

SoCoupling so_coupling(const SoLayout& lay, const ModelIndex& lines) {
  SoCoupling t;
  const int B = lay.B;
  for (int n = 0; n < B; ++n) {
    t.entries.push_back({lay.r_rebal + n, lay.I + n, -1.0});  // w_sch
    for (size_t k = 0; k < lines.directed_from.size(); ++k) {
      if (lines.directed_from[k] == n) {
        t.entries.push_back({lay.r_rebal + n, lay.I + B + n, lines.directed_b[k]});
        t.entries.push_back(
            {lay.r_rebal + n, lay.I + B + lines.directed_to[k], -lines.directed_b[k]});
      }
    }
  }
  for (int i = 0; i < lay.I; ++i) {
    t.entries.push_back({lay.r_blo + i, i, 1.0});
    t.entries.push_back({lay.r_bhi + i, i, -1.0});
  }
  return t;
}

// RHS of one scenario block before first-stage terms are subtracted.
std::vector<double> so_block_h(const MarketCase& c, const SoLayout& lay,
                               const ModelIndex& lines, const std::vector<double>& w) {
  std::vector<double> h(lay.m_block, 0.0);
  for (int n = 0; n < lay.B; ++n) h[lay.r_rebal + n] = -w[n];
  for (int k = 0; k < lay.L; ++k) h[lay.r_liner + k] = -lines.directed_cap[k];
  for (int n = 0; n < lay.B; ++n) h[lay.r_spill + n] = -w[n];
  for (int i = 0; i < lay.I; ++i) {
    h[lay.r_ru + i] = -c.generators[i].max_up_reserve;
    h[lay.r_rd + i] = -c.generators[i].max_down_reserve;
    h[lay.r_blo + i] = 0.0;
    h[lay.r_bhi + i] = -c.generators[i].capacity;
  }
  for (int j = 0; j < lay.J; ++j) h[lay.r_curt + j] = -c.loads[j].demand;
  h[lay.r_ref] = 0.0;
  return h;
}

}  // namespace

BuiltSoLp build_so(const MarketCase& c, const ScenarioSet& sc) {
  if (sc.count < 1 || static_cast<int>(sc.w.size()) != sc.count)
    throw ValidationError({"scenario set is empty or inconsistent"});
  for (const auto& row : sc.w)
    if (static_cast<int>(row.size()) != c.num_buses())
      throw ValidationError({"scenario realizations must cover every bus"});
  double psum = 0;
  for (double p : sc.probability) {
    if (!(p > 0)) throw ValidationError({"scenario probabilities must be positive"});
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-9)
    throw ValidationError({"scenario probabilities must sum to one"});

  const int B = c.num_buses(), I = c.num_generators(), J = c.num_loads();
  BuiltSoLp out;
  LpProblem& pb = out.lp;
  pb.name = "so";
  SoIndex& ix = out.index;
  ModelIndex lines;
  expand_lines(c, lines);
  const int L = static_cast<int>(lines.directed_from.size());

  ix.p.resize(I);
  for (int i = 0; i < I; ++i)
    ix.p[i] = pb.add_column(key("p", c.generators[i].id), c.generators[i].energy_cost);
  ix.w_sch.resize(B);
  for (int n = 0; n < B; ++n) ix.w_sch[n] = pb.add_column(key("wsch", c.buses[n]), 0.0);
  ix.delta0.resize(B);
  for (int n = 0; n < B; ++n)
    ix.delta0[n] = pb.add_column(key("d0", c.buses[n]), 0.0, VarBound::Free);

  ix.r_up.assign(sc.count, std::vector<int>(I));
  ix.r_dn.assign(sc.count, std::vector<int>(I));
  ix.s.assign(sc.count, std::vector<int>(J));
  ix.w_spi.assign(sc.count, std::vector<int>(B));
  ix.delta.assign(sc.count, std::vector<int>(B));
  double constant = 0.0;
  for (int w = 0; w < sc.count; ++w) {
    double pi = sc.probability[w];
    std::string tag = "_w" + std::to_string(w);
    for (int i = 0; i < I; ++i) {
      ix.r_up[w][i] = pb.add_column(key("ru", c.generators[i].id) + tag,
                                    pi * c.generators[i].up_cost);
      ix.r_dn[w][i] = pb.add_column(key("rd", c.generators[i].id) + tag,
                                    -pi * c.generators[i].down_saving);
    }
    for (int j = 0; j < J; ++j)
      ix.s[w][j] = pb.add_column(key("s", c.loads[j].id) + tag, pi * c.loads[j].curtail_cost);
    for (int n = 0; n < B; ++n) {
      ix.w_spi[w][n] = pb.add_column(key("wspi", c.buses[n]) + tag, -pi * c.vres_cost_at(n));
      constant += pi * c.vres_cost_at(n) * sc.w[w][n];
    }
    for (int n = 0; n < B; ++n)
      ix.delta[w][n] = pb.add_column(key("dr", c.buses[n]) + tag, 0.0, VarBound::Free);
  }
  pb.cost_constant = constant;

  // first-stage rows
  ix.balance.resize(B);
  for (int n = 0; n < B; ++n) {
    std::vector<std::pair<int, double>> row;
    for (int i : c.generators_at(n)) row.push_back({ix.p[i], 1.0});
    row.push_back({ix.w_sch[n], 1.0});
    for (int k = 0; k < L; ++k) {
      if (lines.directed_from[k] == n) {
        row.push_back({ix.delta0[n], -lines.directed_b[k]});
        row.push_back({ix.delta0[lines.directed_to[k]], lines.directed_b[k]});
      }
    }
    double rhs = 0;
    for (int j : c.loads_at(n)) rhs += c.loads[j].demand;
    ix.balance[n] = pb.add_row(key("bal", c.buses[n]), RowSense::Equal, rhs, std::move(row));
  }
  for (int k = 0; k < L; ++k) {
    int a = lines.directed_from[k], b = lines.directed_to[k];
    pb.add_row(key("line0", c.buses[a] + "_" + c.buses[b]), RowSense::GreaterEqual,
               -lines.directed_cap[k],
               {{ix.delta0[a], -lines.directed_b[k]}, {ix.delta0[b], lines.directed_b[k]}});
  }
  for (int n = 0; n < B; ++n)
    pb.add_row(key("wcap", c.buses[n]), RowSense::GreaterEqual, -c.schedule_cap_at(n),
               {{ix.w_sch[n], -1.0}});
  for (int i = 0; i < I; ++i)
    pb.add_row(key("pcap", c.generators[i].id), RowSense::GreaterEqual,
               -c.generators[i].capacity, {{ix.p[i], -1.0}});
  int ref = c.bus_index(c.reference_bus);
  pb.add_row("ref0", RowSense::Equal, 0.0, {{ix.delta0[ref], 1.0}});

  // scenario blocks
  ix.rebalance.assign(sc.count, std::vector<int>(B));
  for (int w = 0; w < sc.count; ++w) {
    std::string tag = "_w" + std::to_string(w);
    for (int n = 0; n < B; ++n) {
      std::vector<std::pair<int, double>> row;
      for (int i : c.generators_at(n)) {
        row.push_back({ix.r_up[w][i], 1.0});
        row.push_back({ix.r_dn[w][i], -1.0});
      }
      for (int j : c.loads_at(n)) row.push_back({ix.s[w][j], 1.0});
      row.push_back({ix.w_sch[n], -1.0});
      row.push_back({ix.w_spi[w][n], -1.0});
      for (int k = 0; k < L; ++k) {
        if (lines.directed_from[k] == n) {
          row.push_back({ix.delta0[n], lines.directed_b[k]});
          row.push_back({ix.delta[w][n], -lines.directed_b[k]});
          row.push_back({ix.delta0[lines.directed_to[k]], -lines.directed_b[k]});
          row.push_back({ix.delta[w][lines.directed_to[k]], lines.directed_b[k]});
        }
      }
      ix.rebalance[w][n] = pb.add_row(key("rebal", c.buses[n]) + tag, RowSense::Equal,
                                      -sc.w[w][n], std::move(row));
    }
    for (int k = 0; k < L; ++k) {
      int a = lines.directed_from[k], b = lines.directed_to[k];
      pb.add_row(key("liner", c.buses[a] + "_" + c.buses[b]) + tag, RowSense::GreaterEqual,
                 -lines.directed_cap[k],
                 {{ix.delta[w][a], -lines.directed_b[k]}, {ix.delta[w][b], lines.directed_b[k]}});
    }
    for (int n = 0; n < B; ++n)
      pb.add_row(key("spl_hi", c.buses[n]) + tag, RowSense::GreaterEqual, -sc.w[w][n],
                 {{ix.w_spi[w][n], -1.0}});
    for (int i = 0; i < I; ++i)
      pb.add_row(key("ru_hi", c.generators[i].id) + tag, RowSense::GreaterEqual,
                 -c.generators[i].max_up_reserve, {{ix.r_up[w][i], -1.0}});
    for (int i = 0; i < I; ++i)
      pb.add_row(key("rd_hi", c.generators[i].id) + tag, RowSense::GreaterEqual,
                 -c.generators[i].max_down_reserve, {{ix.r_dn[w][i], -1.0}});
    for (int i = 0; i < I; ++i)
      pb.add_row(key("band_lo", c.generators[i].id) + tag, RowSense::GreaterEqual, 0.0,
                 {{ix.p[i], 1.0}, {ix.r_up[w][i], 1.0}, {ix.r_dn[w][i], -1.0}});
    for (int i = 0; i < I; ++i)
      pb.add_row(key("band_hi", c.generators[i].id) + tag, RowSense::GreaterEqual,
                 -c.generators[i].capacity,
                 {{ix.p[i], -1.0}, {ix.r_up[w][i], -1.0}, {ix.r_dn[w][i], 1.0}});
    for (int j = 0; j < J; ++j)
      pb.add_row(key("curt_hi", c.loads[j].id) + tag, RowSense::GreaterEqual,
                 -c.loads[j].demand, {{ix.s[w][j], -1.0}});
    pb.add_row(std::string("refr") + tag, RowSense::Equal, 0.0, {{ix.delta[w][ref], 1.0}});
  }
  pb.validate();
  return out;
}

// ---------------------------------------------------------------------------
// SO solve: direct for small scenario sets, L-shaped decomposition otherwise.
// ---------------------------------------------------------------------------

namespace {

struct BendersCut {
  bool feasibility = false;
  int scenario = -1;                                  // feasibility cuts only
  std::vector<std::pair<int, double>> master_coeffs;  // over first-stage cols
  double rhs = 0.0;
  std::vector<std::vector<double>> block_duals;  // [scenario][block row], optimality
  std::vector<double> farkas;                    // feasibility
};

SoSolution map_so_solution(const MarketCase& c, const ScenarioSet& sc,
                           const BuiltSoLp& built, const LpSolution& sol, int rounds,
                           double tol) {
  const int B = c.num_buses(), I = c.num_generators(), J = c.num_loads();
  SoSolution out;
  out.rounds = rounds;
  out.objective = sol.objective;
  out.lp_rows = built.lp.num_rows();
  out.lp_cols = built.lp.num_cols();
  out.probability = sc.probability;
  out.kkt = lp::check_kkt(built.lp, sol);
  if (!out.kkt.pass(tol))
    throw SolverError("stochastic market solution failed its optimality certificate");
  out.p.resize(I);
  for (int i = 0; i < I; ++i) out.p[i] = sol.primal[built.index.p[i]];
  out.w_sch.resize(B);
  out.delta0.resize(B);
  for (int n = 0; n < B; ++n) {
    out.w_sch[n] = sol.primal[built.index.w_sch[n]];
    out.delta0[n] = sol.primal[built.index.delta0[n]];
  }
  out.r_up.assign(sc.count, std::vector<double>(I));
  out.r_dn.assign(sc.count, std::vector<double>(I));
  out.s.assign(sc.count, std::vector<double>(J));
  out.w_spi.assign(sc.count, std::vector<double>(B));
  out.delta.assign(sc.count, std::vector<double>(B));
  out.nu.assign(sc.count, std::vector<double>(B));
  for (int w = 0; w < sc.count; ++w) {
    for (int i = 0; i < I; ++i) {
      out.r_up[w][i] = sol.primal[built.index.r_up[w][i]];
      out.r_dn[w][i] = sol.primal[built.index.r_dn[w][i]];
    }
    for (int j = 0; j < J; ++j) out.s[w][j] = sol.primal[built.index.s[w][j]];
    for (int n = 0; n < B; ++n) {
      out.w_spi[w][n] = sol.primal[built.index.w_spi[w][n]];
      out.delta[w][n] = sol.primal[built.index.delta[w][n]];
      out.nu[w][n] = sol.dual[built.index.rebalance[w][n]];
    }
  }
  out.lambda.resize(B);
  for (int n = 0; n < B; ++n) out.lambda[n] = sol.dual[built.index.balance[n]];
  return out;
}

}  // namespace

SoSolution solve_so(const MarketCase& c, const ScenarioSet& sc, const SoSolveOptions& opts) {
  BuiltSoLp built = build_so(c, sc);
  const int B = c.num_buses(), I = c.num_generators(), J = c.num_loads();
  bool direct = sc.count <= opts.direct_limit;
  if (opts.force_direct) direct = true;
  if (opts.force_decomposition) direct = false;

  if (direct) {
    LpSolution sol = lp::solve_lp(built.lp, opts.lp);
    if (sol.status == SolveStatus::Infeasible)
      throw ModelInfeasibleError("stochastic market model is infeasible");
    if (sol.status != SolveStatus::Optimal)
      throw SolverError("stochastic market model did not solve to optimality");
    return map_so_solution(c, sc, built, sol, 0, opts.tol);
  }

  ModelIndex lines;
  expand_lines(c, lines);
  SoLayout lay(c, static_cast<int>(lines.directed_from.size()));
  SoCoupling coupling = so_coupling(lay, lines);

  // subproblem template (block rows; rhs varies per scenario and iterate)
  LpProblem sub;
  sub.name = "so_sub";
  {
    std::vector<int> cru(I), crd(I), cs(J), cw(B), cd(B);
    for (int i = 0; i < I; ++i)
      cru[i] = sub.add_column("ru" + std::to_string(i), c.generators[i].up_cost);
    for (int i = 0; i < I; ++i)
      crd[i] = sub.add_column("rd" + std::to_string(i), -c.generators[i].down_saving);
    for (int j = 0; j < J; ++j)
      cs[j] = sub.add_column("s" + std::to_string(j), c.loads[j].curtail_cost);
    for (int n = 0; n < B; ++n)
      cw[n] = sub.add_column("wspi" + std::to_string(n), -c.vres_cost_at(n));
    for (int n = 0; n < B; ++n)
      cd[n] = sub.add_column("dr" + std::to_string(n), 0.0, VarBound::Free);
    for (int n = 0; n < B; ++n) {
      std::vector<std::pair<int, double>> row;
      for (int i : c.generators_at(n)) {
        row.push_back({cru[i], 1.0});
        row.push_back({crd[i], -1.0});
      }
      for (int j : c.loads_at(n)) row.push_back({cs[j], 1.0});
      row.push_back({cw[n], -1.0});
      for (size_t k = 0; k < lines.directed_from.size(); ++k) {
        if (lines.directed_from[k] == n) {
          row.push_back({cd[n], -lines.directed_b[k]});
          row.push_back({cd[lines.directed_to[k]], lines.directed_b[k]});
        }
      }
      sub.add_row("rebal" + std::to_string(n), RowSense::Equal, 0.0, std::move(row));
    }
    for (size_t k = 0; k < lines.directed_from.size(); ++k)
      sub.add_row("liner" + std::to_string(k), RowSense::GreaterEqual,
                  -lines.directed_cap[k],
                  {{cd[lines.directed_from[k]], -lines.directed_b[k]},
                   {cd[lines.directed_to[k]], lines.directed_b[k]}});
    for (int n = 0; n < B; ++n)
      sub.add_row("spl_hi" + std::to_string(n), RowSense::GreaterEqual, 0.0,
                  {{cw[n], -1.0}});
    for (int i = 0; i < I; ++i)
      sub.add_row("ru_hi" + std::to_string(i), RowSense::GreaterEqual,
                  -c.generators[i].max_up_reserve, {{cru[i], -1.0}});
    for (int i = 0; i < I; ++i)
      sub.add_row("rd_hi" + std::to_string(i), RowSense::GreaterEqual,
                  -c.generators[i].max_down_reserve, {{crd[i], -1.0}});
    for (int i = 0; i < I; ++i)
      sub.add_row("band_lo" + std::to_string(i), RowSense::GreaterEqual, 0.0,
                  {{cru[i], 1.0}, {crd[i], -1.0}});
    for (int i = 0; i < I; ++i)
      sub.add_row("band_hi" + std::to_string(i), RowSense::GreaterEqual, 0.0,
                  {{cru[i], -1.0}, {crd[i], 1.0}});
    for (int j = 0; j < J; ++j)
      sub.add_row("curt_hi" + std::to_string(j), RowSense::GreaterEqual,
                  -c.loads[j].demand, {{cs[j], -1.0}});
    int refb = c.bus_index(c.reference_bus);
    sub.add_row("refr", RowSense::Equal, 0.0, {{cd[refb], 1.0}});
  }
  lp::RepeatSolver sub_solver(sub, opts.lp);

  // master problem state
  const int n_first = lay.n_first;
  std::vector<BendersCut> cuts;
  double theta_lb = -1000.0;
  {
    double lb = 0.0;
    for (int i = 0; i < I; ++i)
      lb -= c.generators[i].down_saving * c.generators[i].max_down_reserve;
    double wmax = 0.0;
    for (int w = 0; w < sc.count; ++w)
      for (int n = 0; n < B; ++n) wmax = std::max(wmax, c.vres_cost_at(n) * sc.w[w][n]);
    theta_lb += lb - wmax * B;
  }

  double total_constant = built.lp.cost_constant;
  std::vector<double> x(n_first, 0.0);
  LpSolution master_sol;
  int round = 0;
  bool converged = false;

  std::vector<std::vector<double>> h_blocks(sc.count);
  for (int w = 0; w < sc.count; ++w)
    h_blocks[w] = so_block_h(c, lay, lines, sc.w[w]);

  for (round = 1; round <= opts.max_rounds; ++round) {
    // (re)build master
    LpProblem master;
    master.name = "so_master";
    for (int i = 0; i < I; ++i)
      master.add_column("p" + std::to_string(i), c.generators[i].energy_cost);
    for (int n = 0; n < B; ++n) master.add_column("wsch" + std::to_string(n), 0.0);
    for (int n = 0; n < B; ++n)
      master.add_column("d0" + std::to_string(n), 0.0, VarBound::Free);
    int theta = master.add_column("theta", 1.0, VarBound::Free);
    for (int n = 0; n < B; ++n) {
      std::vector<std::pair<int, double>> row;
      for (int i : c.generators_at(n)) row.push_back({i, 1.0});
      row.push_back({I + n, 1.0});
      for (size_t k = 0; k < lines.directed_from.size(); ++k) {
        if (lines.directed_from[k] == n) {
          row.push_back({I + B + n, -lines.directed_b[k]});
          row.push_back({I + B + lines.directed_to[k], lines.directed_b[k]});
        }
      }
      double rhs = 0;
      for (int j : c.loads_at(n)) rhs += c.loads[j].demand;
      master.add_row("bal" + std::to_string(n), RowSense::Equal, rhs, std::move(row));
    }
    for (size_t k = 0; k < lines.directed_from.size(); ++k)
      master.add_row("line0_" + std::to_string(k), RowSense::GreaterEqual,
                     -lines.directed_cap[k],
                     {{I + B + lines.directed_from[k], -lines.directed_b[k]},
                      {I + B + lines.directed_to[k], lines.directed_b[k]}});
    for (int n = 0; n < B; ++n)
      master.add_row("wcap" + std::to_string(n), RowSense::GreaterEqual,
                     -c.schedule_cap_at(n), {{I + n, -1.0}});
    for (int i = 0; i < I; ++i)
      master.add_row("pcap" + std::to_string(i), RowSense::GreaterEqual,
                     -c.generators[i].capacity, {{i, -1.0}});
    master.add_row("ref0", RowSense::Equal, 0.0,
                   {{I + B + c.bus_index(c.reference_bus), 1.0}});
    master.add_row("theta_lb", RowSense::GreaterEqual, theta_lb, {{theta, 1.0}});
    for (size_t k = 0; k < cuts.size(); ++k) {
      std::vector<std::pair<int, double>> row = cuts[k].master_coeffs;
      if (!cuts[k].feasibility) row.push_back({theta, 1.0});
      master.add_row("cut" + std::to_string(k), RowSense::GreaterEqual, cuts[k].rhs,
                     std::move(row));
    }
    master_sol = lp::solve_lp(master, opts.lp);
    if (master_sol.status == SolveStatus::Infeasible)
      throw ModelInfeasibleError("stochastic market model is infeasible");
    if (master_sol.status != SolveStatus::Optimal)
      throw SolverError("stochastic master did not solve to optimality");
    for (int j = 0; j < n_first; ++j) x[j] = master_sol.primal[j];

    // solve every scenario at the current first stage
    double q_total = 0.0;
    bool added_feasibility = false;
    std::vector<double> rhs(lay.m_block);
    BendersCut opt_cut;
    opt_cut.block_duals.assign(sc.count, {});
    std::vector<double> agg_coeffs(n_first, 0.0);
    double agg_rhs = 0.0;
    std::vector<LpSolution> sub_solutions(sc.count);
    for (int w = 0; w < sc.count && !added_feasibility; ++w) {
      rhs = h_blocks[w];
      for (auto [r, j, coef] : coupling.entries) rhs[r] -= coef * x[j];
      LpSolution ssol = sub_solver.solve(rhs);
      if (ssol.status == SolveStatus::Infeasible) {
        BendersCut fc;
        fc.feasibility = true;
        fc.scenario = w;
        fc.farkas = ssol.farkas;
        double norm = 0;
        for (double v : fc.farkas) norm = std::max(norm, std::abs(v));
        if (norm > 0)
          for (double& v : fc.farkas) v /= norm;
        std::vector<double> coeffs(n_first, 0.0);
        for (auto [r, j, coef] : coupling.entries) coeffs[j] += fc.farkas[r] * coef;
        double frhs = 0;
        for (int r = 0; r < lay.m_block; ++r) frhs += fc.farkas[r] * h_blocks[w][r];
        for (int j = 0; j < n_first; ++j)
          if (coeffs[j] != 0.0) fc.master_coeffs.push_back({j, coeffs[j]});
        fc.rhs = frhs;
        cuts.push_back(std::move(fc));
        added_feasibility = true;
        break;
      }
      if (ssol.status != SolveStatus::Optimal)
        throw SolverError("stochastic subproblem did not solve to optimality");
      double pi = sc.probability[w];
      q_total += pi * ssol.objective;
      opt_cut.block_duals[w] = ssol.dual;
      for (auto [r, j, coef] : coupling.entries)
        agg_coeffs[j] += pi * ssol.dual[r] * coef;
      for (int r = 0; r < lay.m_block; ++r) agg_rhs += pi * ssol.dual[r] * h_blocks[w][r];
      sub_solutions[w] = std::move(ssol);
    }
    if (added_feasibility) continue;

    double first_cost = 0.0;
    for (int i = 0; i < I; ++i) first_cost += c.generators[i].energy_cost * x[i];
    double ub = first_cost + q_total;
    double lb = master_sol.objective;
    if (ub - lb <= 1e-10 * (1.0 + std::abs(ub))) {
      // assemble an optimal primal/dual pair for the assembled LP
      LpSolution full;
      full.status = SolveStatus::Optimal;
      full.objective = ub + total_constant;
      full.primal.assign(built.lp.num_cols(), 0.0);
      for (int i = 0; i < I; ++i) full.primal[built.index.p[i]] = x[i];
      for (int n = 0; n < B; ++n) {
        full.primal[built.index.w_sch[n]] = x[I + n];
        full.primal[built.index.delta0[n]] = x[I + B + n];
      }
      for (int w = 0; w < sc.count; ++w) {
        const auto& sp = sub_solutions[w].primal;
        for (int i = 0; i < I; ++i) {
          full.primal[built.index.r_up[w][i]] = sp[lay.c_ru + i];
          full.primal[built.index.r_dn[w][i]] = sp[lay.c_rd + i];
        }
        for (int j = 0; j < J; ++j) full.primal[built.index.s[w][j]] = sp[lay.c_s + j];
        for (int n = 0; n < B; ++n) {
          full.primal[built.index.w_spi[w][n]] = sp[lay.c_wspi + n];
          full.primal[built.index.delta[w][n]] = sp[lay.c_delta + n];
        }
      }
      full.dual.assign(built.lp.num_rows(), 0.0);
      for (int r = 0; r < lay.m_first; ++r) full.dual[r] = master_sol.dual[r];
      // theta_lb row sits at lay.m_first; cuts follow
      for (size_t k = 0; k < cuts.size(); ++k) {
        double u = master_sol.dual[lay.m_first + 1 + static_cast<int>(k)];
        if (std::abs(u) < 1e-12) continue;
        const BendersCut& cut = cuts[k];
        if (cut.feasibility) {
          int base = lay.m_first + cut.scenario * lay.m_block;
          for (int r = 0; r < lay.m_block; ++r)
            full.dual[base + r] += u * cut.farkas[r];
        } else {
          for (int w = 0; w < sc.count; ++w) {
            int base = lay.m_first + w * lay.m_block;
            double scale = u * sc.probability[w];
            const auto& d = cut.block_duals[w];
            for (int r = 0; r < lay.m_block; ++r) full.dual[base + r] += scale * d[r];
          }
        }
      }
      // fold the active final subproblem duals in when no cut is tight yet
      // (first convergence round): theta stationarity needs total weight one
      {
        double weight = 0.0;
        for (size_t k = 0; k < cuts.size(); ++k)
          if (!cuts[k].feasibility)
            weight += master_sol.dual[lay.m_first + 1 + static_cast<int>(k)];
        if (std::abs(weight - 1.0) > 1e-9) {
          double missing = 1.0 - weight;
          for (int w = 0; w < sc.count; ++w) {
            int base = lay.m_first + w * lay.m_block;
            double scale = missing * sc.probability[w];
            for (int r = 0; r < lay.m_block; ++r)
              full.dual[base + r] += scale * sub_solutions[w].dual[r];
          }
        }
      }
      converged = true;
      return map_so_solution(c, sc, built, full, round, opts.tol);
    }

    // add the aggregated optimality cut
    opt_cut.rhs = agg_rhs;
    for (int j = 0; j < n_first; ++j)
      if (agg_coeffs[j] != 0.0) opt_cut.master_coeffs.push_back({j, agg_coeffs[j]});
    cuts.push_back(std::move(opt_cut));
  }
  if (!converged)
    throw SolverError("two-stage decomposition failed to converge within the round limit");
  return {};
}

}  // namespace ccmkt
