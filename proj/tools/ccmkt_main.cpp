// ccmkt: chance-constrained market clearing, pricing and settlement CLI.
//
// Exit codes: 0 success; 10 parse/validation/input problems; 20 infeasible
// model; 21 dispatch-assumption violation; 30 adequacy or identity failure;
// 40 statistical band failure; 50 reproduction diff failure.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "ccmkt/clearing.hpp"
#include "ccmkt/csvio.hpp"
#include "ccmkt/errors.hpp"
#include "ccmkt/montecarlo.hpp"
#include "ccmkt/netmodel.hpp"
#include "ccmkt/pricing.hpp"
#include "ccmkt/profits.hpp"

namespace fs = std::filesystem;
using namespace ccmkt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 10;
constexpr int kExitInfeasible = 20;
constexpr int kExitAssumption = 21;
constexpr int kExitAdequacy = 30;
constexpr int kExitBand = 40;
constexpr int kExitDiff = 50;

struct RunConfig {
  std::string case_path;
  std::optional<double> epsilon;
  int scenarios = 1000;
  uint64_t seed = 1;
  long draws = 200000;
  std::string out_dir = "out";
  double tol = 1e-6;
  int round = 2;
};

std::string fmt(double v, int decimals) { return csv::format(v, decimals); }

MarketCase load_case(const RunConfig& cfg) {
  MarketCase c = load_case_file(cfg.case_path);
  if (cfg.epsilon) {
    c.epsilon = *cfg.epsilon;
    validate_case(c);
  }
  for (const auto& w : case_warnings(c)) std::cerr << "warning: " << w << "\n";
  return c;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create output directory: " + dir);
}

csv::Table dispatch_table(const MarketCase& c, const CcoSolution& sol,
                          const PriceSchedule& prices, int round) {
  csv::Table t({"stage", "element", "action", "expected", "std_dev", "price"});
  for (int i = 0; i < c.num_generators(); ++i)
    t.add_row({"scheduling", c.generators[i].id, "p", fmt(sol.p[i], round), "",
               fmt(prices.energy_sched[c.bus_index(c.generators[i].bus)], round)});
  for (int n = 0; n < c.num_buses(); ++n)
    if (c.has_vres(n))
      t.add_row({"scheduling", "W_" + c.buses[n], "w_sch", fmt(sol.w_sch[n], round),
                 "", fmt(prices.vres_sched[n], round)});
  for (int j = 0; j < c.num_loads(); ++j) {
    int n = c.bus_index(c.loads[j].bus);
    t.add_row({"scheduling", c.loads[j].id, "consumption",
               fmt(c.loads[j].demand, round), "", fmt(prices.load_sched[n], round)});
  }
  for (int i = 0; i < c.num_generators(); ++i) {
    double sigma = c.sigma_at(c.bus_index(c.generators[i].bus));
    t.add_row({"real-time", c.generators[i].id, "r_up", fmt(sol.r_up[i], round),
               fmt(sol.a_up[i] * sigma, round), fmt(prices.reserve_up[i], round)});
  }
  for (int i = 0; i < c.num_generators(); ++i) {
    double sigma = c.sigma_at(c.bus_index(c.generators[i].bus));
    t.add_row({"real-time", c.generators[i].id, "r_dn", fmt(sol.r_dn[i], round),
               fmt(sol.a_dn[i] * sigma, round), fmt(prices.reserve_dn[i], round)});
  }
  for (int n = 0; n < c.num_buses(); ++n)
    if (c.has_vres(n))
      t.add_row({"real-time", "W_" + c.buses[n], "w_spi", fmt(sol.w_spi[n], round),
                 fmt(sol.beta[n] * c.sigma_at(n), round),
                 fmt(prices.vres_deviation[n], round)});
  for (int j = 0; j < c.num_loads(); ++j) {
    int n = c.bus_index(c.loads[j].bus);
    t.add_row({"real-time", c.loads[j].id, "curtailment", fmt(sol.s[j], round),
               fmt(sol.gamma[j] * c.sigma_at(n), round),
               fmt(prices.curtailment[n], round)});
  }
  return t;
}

csv::Table price_table(const MarketCase& c, const PriceSchedule& prices, int round) {
  csv::Table t({"id", "kind", "scheduled", "upward", "downward", "vres_scheduled",
                "load_scheduled", "rebalance", "vres_deviation", "curtailment",
                "zeta"});
  for (int i = 0; i < c.num_generators(); ++i) {
    int n = c.bus_index(c.generators[i].bus);
    t.add_row({c.generators[i].id, "generator", fmt(prices.energy_sched[n], round),
               fmt(prices.reserve_up[i], round), fmt(prices.reserve_dn[i], round), "",
               "", "", "", "", ""});
  }
  for (int n = 0; n < c.num_buses(); ++n)
    t.add_row({c.buses[n], "bus", fmt(prices.energy_sched[n], round), "", "",
               fmt(prices.vres_sched[n], round), fmt(prices.load_sched[n], round),
               fmt(prices.rebalance[n], round), fmt(prices.vres_deviation[n], round),
               fmt(prices.curtailment[n], round), fmt(prices.zeta, round)});
  return t;
}

csv::Table profit_table(const MarketCase& c, const ProfitReport& rep, int round) {
  csv::Table t({"participant", "expected", "std_dev"});
  t.add_row(
      {"Operator", fmt(rep.operator_profit, round), fmt(rep.operator_std, round)});
  for (int i = 0; i < c.num_generators(); ++i)
    t.add_row({c.generators[i].id, fmt(rep.gen_profit[i], round),
               fmt(rep.gen_std[i], round)});
  for (int n = 0; n < c.num_buses(); ++n)
    if (c.has_vres(n))
      t.add_row({"W_" + c.buses[n], fmt(rep.vres_profit[n], round),
                 fmt(rep.vres_std[n], round)});
  for (int j = 0; j < c.num_loads(); ++j)
    t.add_row({c.loads[j].id, fmt(rep.load_surplus[j], round),
               fmt(rep.load_std[j], round)});
  return t;
}

csv::Table dual_table(const MarketCase& c, const CcoSolution& sol) {
  csv::Table t({"dual", "id", "value"});
  auto rowfmt = [](double v) { return csv::format(v, 6); };
  for (int n = 0; n < c.num_buses(); ++n) {
    t.add_row({"lambda", c.buses[n], rowfmt(sol.lambda[n])});
    t.add_row({"nu", c.buses[n], rowfmt(sol.nu[n])});
    t.add_row({"kappa", c.buses[n], rowfmt(sol.kappa[n])});
    t.add_row({"mu", c.buses[n], rowfmt(sol.mu[n])});
    t.add_row({"y_spill", c.buses[n], rowfmt(sol.y_spill[n])});
    t.add_row({"x_spill", c.buses[n], rowfmt(sol.x_spill[n])});
  }
  for (int i = 0; i < c.num_generators(); ++i) {
    const std::string& id = c.generators[i].id;
    t.add_row({"rho", id, rowfmt(sol.rho[i])});
    t.add_row({"y_up", id, rowfmt(sol.y_up[i])});
    t.add_row({"x_up", id, rowfmt(sol.x_up[i])});
    t.add_row({"y_dn", id, rowfmt(sol.y_dn[i])});
    t.add_row({"x_dn", id, rowfmt(sol.x_dn[i])});
    t.add_row({"y_band", id, rowfmt(sol.y_band[i])});
    t.add_row({"x_band", id, rowfmt(sol.x_band[i])});
  }
  for (int j = 0; j < c.num_loads(); ++j) {
    t.add_row({"y_curt", c.loads[j].id, rowfmt(sol.y_curt[j])});
    t.add_row({"x_curt", c.loads[j].id, rowfmt(sol.x_curt[j])});
  }
  return t;
}

struct CcoArtifacts {
  CcoSolution sol;
  PriceSchedule prices;
  ProfitReport report;
};

CcoArtifacts run_cco(const MarketCase& c, double tol) {
  CcoArtifacts art;
  CcoSolveOptions opts;
  opts.tol = std::min(tol, 1e-6);
  art.sol = solve_cco(c, opts);
  art.prices = cco_prices(c, art.sol);
  ProfitOptions popts;
  popts.tol = tol;
  art.report = cco_profit_report(c, art.sol, art.prices, popts);
  return art;
}

void write_cco_artifacts(const MarketCase& c, const CcoArtifacts& art,
                         const std::string& dir, const std::string& prefix,
                         int round) {
  ensure_dir(dir);
  dispatch_table(c, art.sol, art.prices, round)
      .write(dir + "/" + prefix + "dispatch.csv");
  price_table(c, art.prices, round).write(dir + "/" + prefix + "prices.csv");
  profit_table(c, art.report, round).write(dir + "/" + prefix + "profits.csv");
  dual_table(c, art.sol).write(dir + "/" + prefix + "duals.csv");
}

int cmd_solve_cco(const RunConfig& cfg) {
  MarketCase c = load_case(cfg);
  CcoArtifacts art = run_cco(c, cfg.tol);
  write_cco_artifacts(c, art, cfg.out_dir, "", cfg.round);
  std::cout << "objective " << fmt(art.sol.objective, 6) << "\n"
            << "artifacts in " << cfg.out_dir << "\n";
  return kExitOk;
}

struct SoArtifacts {
  ScenarioSet scenarios;
  SoSolution sol;
  SoPriceSchedule prices;
  SoProfitReport report;
};

SoArtifacts run_so(const MarketCase& c, int count, uint64_t seed, double tol) {
  SoArtifacts art;
  art.scenarios = sample_scenarios(c, count, seed);
  SoSolveOptions opts;
  opts.tol = std::max(tol, 1e-6);
  art.sol = solve_so(c, art.scenarios, opts);
  art.prices = so_prices(c, art.sol, art.scenarios);
  ProfitOptions popts;
  popts.tol = tol;
  art.report = so_profits(c, art.sol, art.scenarios, art.prices, popts);
  return art;
}

void write_so_artifacts(const MarketCase& c, const SoArtifacts& art,
                        const std::string& dir, const std::string& prefix,
                        int round) {
  ensure_dir(dir);
  {
    std::ofstream f(dir + "/" + prefix + "scenarios.csv", std::ios::binary);
    f << scenarios_to_csv(c, art.scenarios);
  }
  {
    csv::Table t({"stage", "element", "action", "value"});
    for (int i = 0; i < c.num_generators(); ++i)
      t.add_row({"scheduling", c.generators[i].id, "p", fmt(art.sol.p[i], round)});
    for (int n = 0; n < c.num_buses(); ++n)
      if (c.has_vres(n))
        t.add_row({"scheduling", "W_" + c.buses[n], "w_sch",
                   fmt(art.sol.w_sch[n], round)});
    for (int i = 0; i < c.num_generators(); ++i) {
      double ru = 0, rd = 0;
      for (int w = 0; w < art.scenarios.count; ++w) {
        ru += art.scenarios.probability[w] * art.sol.r_up[w][i];
        rd += art.scenarios.probability[w] * art.sol.r_dn[w][i];
      }
      t.add_row({"real-time", c.generators[i].id, "r_up_mean", fmt(ru, round)});
      t.add_row({"real-time", c.generators[i].id, "r_dn_mean", fmt(rd, round)});
    }
    t.write(dir + "/" + prefix + "so_dispatch.csv");
  }
  {
    csv::Table t({"bus", "scheduled", "real_time_mean", "real_time_std"});
    for (int n = 0; n < c.num_buses(); ++n)
      t.add_row({c.buses[n], fmt(art.prices.energy_sched[n], round),
                 fmt(art.prices.real_time_mean[n], round),
                 fmt(art.prices.real_time_std[n], round)});
    t.write(dir + "/" + prefix + "so_prices.csv");
  }
  {
    csv::Table t({"participant", "expected", "std_dev"});
    t.add_row({"Operator", fmt(art.report.operator_profit, round),
               fmt(art.report.operator_std, round)});
    for (int i = 0; i < c.num_generators(); ++i)
      t.add_row({c.generators[i].id, fmt(art.report.gen_profit[i], round),
                 fmt(art.report.gen_std[i], round)});
    for (int n = 0; n < c.num_buses(); ++n)
      if (c.has_vres(n))
        t.add_row({"W_" + c.buses[n], fmt(art.report.vres_profit[n], round),
                   fmt(art.report.vres_std[n], round)});
    for (int j = 0; j < c.num_loads(); ++j)
      t.add_row({c.loads[j].id, fmt(art.report.load_surplus[j], round),
                 fmt(art.report.load_std[j], round)});
    t.write(dir + "/" + prefix + "so_profits.csv");
  }
}

int cmd_solve_so(const RunConfig& cfg) {
  MarketCase c = load_case(cfg);
  SoArtifacts art = run_so(c, cfg.scenarios, cfg.seed, cfg.tol);
  write_so_artifacts(c, art, cfg.out_dir, "", cfg.round);
  std::cout << "objective " << fmt(art.sol.objective, 6) << "\n"
            << "artifacts in " << cfg.out_dir << "\n";
  return kExitOk;
}

void write_histograms(const MarketCase& c, const SoPriceSchedule& prices,
                      const std::string& dir, const std::string& prefix) {
  for (int n = 0; n < c.num_buses(); ++n) {
    const auto& series = prices.real_time[n];
    double lo = series[0], hi = series[0];
    for (double v : series) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // fixed half-unit bins over [min-1, max+1] keep runs comparable
    double start = std::floor((lo - 1.0) * 2.0) / 2.0;
    double stop = std::ceil((hi + 1.0) * 2.0) / 2.0;
    int bins = std::max(1, static_cast<int>(std::lround((stop - start) / 0.5)));
    std::vector<long> count(bins, 0);
    for (double v : series) {
      int b = std::min(bins - 1, std::max(0, static_cast<int>((v - start) / 0.5)));
      ++count[b];
    }
    csv::Table t({"bin_low", "bin_high", "count", "frequency"});
    for (int b = 0; b < bins; ++b)
      t.add_row({fmt(start + 0.5 * b, 2), fmt(start + 0.5 * (b + 1), 2),
                 std::to_string(count[b]),
                 fmt(static_cast<double>(count[b]) / series.size(), 6)});
    t.write(dir + "/" + prefix + "price_histogram_bus_" + c.buses[n] + ".csv");
  }
}

int cmd_compare(const RunConfig& cfg) {
  MarketCase c = load_case(cfg);
  CcoArtifacts cco = run_cco(c, cfg.tol);
  SoArtifacts so = run_so(c, cfg.scenarios, cfg.seed, cfg.tol);
  ensure_dir(cfg.out_dir);
  csv::Table t({"action", "element", "stage", "cco_price", "so_mean", "so_std"});
  auto add = [&](const std::string& action, const std::string& el, double ccop,
                 int bus) {
    t.add_row({action, el, "real-time", fmt(ccop, cfg.round),
               fmt(so.prices.real_time_mean[bus], cfg.round),
               fmt(so.prices.real_time_std[bus], cfg.round)});
  };
  for (int i = 0; i < c.num_generators(); ++i)
    add("upward_reserve", c.generators[i].id, cco.prices.reserve_up[i],
        c.bus_index(c.generators[i].bus));
  for (int i = 0; i < c.num_generators(); ++i)
    add("downward_reserve", c.generators[i].id, cco.prices.reserve_dn[i],
        c.bus_index(c.generators[i].bus));
  for (int n = 0; n < c.num_buses(); ++n)
    if (c.has_vres(n))
      add("vres_deviation", "W_" + c.buses[n], cco.prices.vres_deviation[n], n);
  for (int j = 0; j < c.num_loads(); ++j) {
    int n = c.bus_index(c.loads[j].bus);
    add("curtailment", c.loads[j].id, cco.prices.curtailment[n], n);
  }
  csv::Table s({"action", "element", "cco_price", "so_price"});
  for (int i = 0; i < c.num_generators(); ++i) {
    int n = c.bus_index(c.generators[i].bus);
    s.add_row({"scheduled_energy", c.generators[i].id,
               fmt(cco.prices.energy_sched[n], cfg.round),
               fmt(so.prices.energy_sched[n], cfg.round)});
  }
  for (int n = 0; n < c.num_buses(); ++n)
    if (c.has_vres(n))
      s.add_row({"scheduled_vres", "W_" + c.buses[n],
                 fmt(cco.prices.vres_sched[n], cfg.round),
                 fmt(so.prices.energy_sched[n], cfg.round)});
  for (int j = 0; j < c.num_loads(); ++j) {
    int n = c.bus_index(c.loads[j].bus);
    s.add_row({"scheduled_load", c.loads[j].id,
               fmt(cco.prices.load_sched[n], cfg.round),
               fmt(so.prices.energy_sched[n], cfg.round)});
  }
  t.write(cfg.out_dir + "/compare_real_time.csv");
  s.write(cfg.out_dir + "/compare_scheduling.csv");
  write_histograms(c, so.prices, cfg.out_dir, "");
  std::cout << "artifacts in " << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, bool trace) {
  MarketCase c = load_case(cfg);
  CcoArtifacts art = run_cco(c, cfg.tol);
  ensure_dir(cfg.out_dir);
  std::ofstream trace_file;
  if (trace) {
    trace_file.open(cfg.out_dir + "/trace.csv", std::ios::binary);
    if (!trace_file) throw ParseError("cannot write trace file");
  }
  EmpiricalStats stats = simulate(c, art.sol, art.prices, art.report, cfg.draws,
                                  cfg.seed, trace ? &trace_file : nullptr);
  {
    std::ofstream f(cfg.out_dir + "/empirical.csv", std::ios::binary);
    f << empirical_to_csv(stats);
  }
  bool band_fail = false;
  if (stats.insufficient_n) {
    std::cerr << "warning: insufficient draw count for spread estimates\n";
  } else {
    for (const auto& ps : stats.participants)
      if (std::abs(ps.z_score) > 4.0) {
        std::cerr << "z-score band exceeded for " << ps.name << ": "
                  << fmt(ps.z_score, 3) << "\n";
        band_fail = true;
      }
    double band = c.epsilon + 3.0 * std::sqrt(c.epsilon * (1.0 - c.epsilon) /
                                              static_cast<double>(cfg.draws));
    for (const auto& b : stats.bounds)
      if (b.name.rfind("wind_negative", 0) != 0 && b.frequency > band) {
        std::cerr << "violation frequency band exceeded for " << b.name << ": "
                  << fmt(b.frequency, 6) << " > " << fmt(band, 6) << "\n";
        band_fail = true;
      }
  }
  if (stats.max_conservation_gap > 1e-8) {
    std::cerr << "money conservation failed: max gap "
              << csv::format(stats.max_conservation_gap, 12) << "\n";
    band_fail = true;
  }
  std::cout << "draws " << stats.draws << ", artifacts in " << cfg.out_dir << "\n";
  return band_fail ? kExitBand : kExitOk;
}

int cmd_apply_variant(const RunConfig& cfg, const std::string& variant_path,
                      const std::string& out_file) {
  MarketCase base = load_case_file(cfg.case_path);
  CaseVariant v = load_variant_file(variant_path);
  MarketCase derived = apply_case_variant(base, v);
  std::ofstream f(out_file, std::ios::binary);
  if (!f) throw ParseError("cannot write " + out_file);
  f << serialize(derived);
  std::cout << "wrote " << out_file << "\n";
  return kExitOk;
}

int cmd_export_lp(const RunConfig& cfg, const std::string& model,
                  const std::string& out_file) {
  MarketCase c = load_case(cfg);
  lp::LpProblem lpp;
  if (model == "dcco") {
    lpp = build_dcco(c).lp;
  } else if (model == "nominal") {
    std::vector<double> w(c.num_buses(), 0.0);
    for (int n = 0; n < c.num_buses(); ++n) w[n] = c.forecast_at(n);
    lpp = build_nominal(c, w).lp;
  } else if (model == "so") {
    lpp = build_so(c, sample_scenarios(c, cfg.scenarios, cfg.seed)).lp;
  } else {
    throw ParseError("unknown model kind: " + model);
  }
  std::ofstream f(out_file, std::ios::binary);
  if (!f) throw ParseError("cannot write " + out_file);
  f << lp::to_lp_format(lpp);
  std::cout << "wrote " << out_file << "\n";
  return kExitOk;
}

// Numeric diff of an emitted table against a bundled reference, cell by cell.
int diff_tables(const std::string& emitted, const std::string& expected, double tol,
                std::vector<std::string>& mismatches) {
  auto got = csv::read_rows(emitted);
  auto want = csv::read_rows(expected);
  if (got.size() != want.size()) {
    mismatches.push_back(expected + ": row count " + std::to_string(got.size()) +
                         " vs " + std::to_string(want.size()));
    return 1;
  }
  int bad = 0;
  for (size_t r = 0; r < got.size(); ++r) {
    if (got[r].size() != want[r].size()) {
      mismatches.push_back(expected + " row " + std::to_string(r) +
                           ": width differs");
      ++bad;
      continue;
    }
    for (size_t k = 0; k < got[r].size(); ++k) {
      const std::string& a = got[r][k];
      const std::string& b = want[r][k];
      if (a == b) continue;
      char* enda = nullptr;
      char* endb = nullptr;
      double va = std::strtod(a.c_str(), &enda);
      double vb = std::strtod(b.c_str(), &endb);
      bool numa = enda && *enda == '\0' && !a.empty();
      bool numb = endb && *endb == '\0' && !b.empty();
      if (numa && numb && std::abs(va - vb) <= tol) continue;
      mismatches.push_back(expected + " row " + std::to_string(r) + " col " +
                           std::to_string(k) + ": got '" + a + "' want '" + b + "'");
      ++bad;
    }
  }
  return bad;
}

int cmd_reproduce(const RunConfig& cfg, bool with_so) {
  fs::path base_dir = fs::path(cfg.case_path).parent_path();
  MarketCase base = load_case(cfg);
  ensure_dir(cfg.out_dir);
  std::vector<std::string> mismatches;
  bool informational = cfg.epsilon.has_value();
  for (int k = 1; k <= 4; ++k) {
    MarketCase c = base;
    if (k > 1) {
      fs::path vp =
          base_dir / "variants" / ("case" + std::to_string(k) + ".variant.json");
      c = apply_case_variant(base, load_variant_file(vp.string()));
    }
    CcoArtifacts art = run_cco(c, cfg.tol);
    std::string prefix = "case" + std::to_string(k) + "_";
    write_cco_artifacts(c, art, cfg.out_dir, prefix, cfg.round);
    for (const char* table : {"dispatch", "prices", "profits"}) {
      std::string emitted = cfg.out_dir + "/" + prefix + table + ".csv";
      std::string expected = "expected/" + prefix + table + ".csv";
      if (!fs::exists(expected)) {
        mismatches.push_back(expected + ": reference file missing");
        continue;
      }
      diff_tables(emitted, expected, 0.011, mismatches);
    }
    if (with_so) {
      SoArtifacts so = run_so(c, cfg.scenarios, cfg.seed + k, cfg.tol);
      write_so_artifacts(c, so, cfg.out_dir, prefix, cfg.round);
      // seed-dependent columns: statistical tolerances only
      std::string expected = "expected/" + prefix + "so_prices.csv";
      if (fs::exists(expected)) {
        auto want = csv::read_rows(expected);
        for (size_t r = 1; r < want.size(); ++r) {
          int n = c.bus_index(want[r][0]);
          if (n < 0) continue;
          double mean = std::strtod(want[r][2].c_str(), nullptr);
          double sd = std::strtod(want[r][3].c_str(), nullptr);
          if (std::abs(so.prices.real_time_mean[n] - mean) > 0.5)
            mismatches.push_back(expected + ": price mean off at bus " + want[r][0]);
          if (std::abs(so.prices.real_time_std[n] - sd) > 1.0)
            mismatches.push_back(expected + ": price spread off at bus " +
                                 want[r][0]);
        }
      }
    }
  }
  csv::Table report({"status", "detail"});
  if (mismatches.empty()) {
    report.add_row({"ok", "all tables match the bundled references"});
  } else {
    for (const auto& m : mismatches) report.add_row({"mismatch", m});
  }
  report.write(cfg.out_dir + "/diff_report.csv");
  for (const auto& m : mismatches) std::cerr << m << "\n";
  std::cout << (mismatches.empty() ? "reproduction clean" : "reproduction differs")
            << ", report in " << cfg.out_dir << "/diff_report.csv\n";
  if (!mismatches.empty() && !informational) return kExitDiff;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chance-constrained electricity market clearing and settlement"};
  app.require_subcommand(1);

  RunConfig cfg;
  double epsilon_flag = -1.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("casefile", cfg.case_path, "market case file")->required();
    sub->add_option("--epsilon", epsilon_flag, "override the violation tolerance");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--tol", cfg.tol, "identity/adequacy tolerance");
    sub->add_option("--round", cfg.round, "table rounding decimals");
    sub->add_option("--scenarios", cfg.scenarios, "scenario count");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--draws", cfg.draws, "settlement draw count");
  };

  auto* sc_cco = app.add_subcommand("solve-cco", "clear the chance-constrained market");
  add_common(sc_cco);
  auto* sc_so = app.add_subcommand("solve-so", "clear the scenario-based market");
  add_common(sc_so);
  auto* sc_cmp = app.add_subcommand("compare", "price both schemes side by side");
  add_common(sc_cmp);
  auto* sc_sim = app.add_subcommand("simulate", "Monte Carlo settlement validation");
  add_common(sc_sim);
  bool sim_trace = false;
  sc_sim->add_flag("--trace", sim_trace, "write a per-draw settlement trace");
  auto* sc_rep = app.add_subcommand("reproduce", "run the bundled cases and diff");
  add_common(sc_rep);
  bool rep_so = false;
  sc_rep->add_flag("--with-so", rep_so, "also run the scenario scheme");
  auto* sc_var = app.add_subcommand("apply-variant", "derive a case from overrides");
  add_common(sc_var);
  std::string variant_path;
  std::string out_file = "derived_case.json";
  std::string lp_model = "dcco";
  std::string lp_out = "model.lp";
  sc_var->add_option("variantfile", variant_path, "variant file")->required();
  sc_var->add_option("--out-file", out_file, "derived case path");
  auto* sc_lp = app.add_subcommand("export-lp", "write the model in LP text format");
  add_common(sc_lp);
  sc_lp->add_option("--model", lp_model, "dcco | nominal | so");
  sc_lp->add_option("--out-file", lp_out, "LP file path");

  CLI11_PARSE(app, argc, argv);
  if (epsilon_flag > 0.0) cfg.epsilon = epsilon_flag;

  try {
    if (sc_cco->parsed()) return cmd_solve_cco(cfg);
    if (sc_so->parsed()) return cmd_solve_so(cfg);
    if (sc_cmp->parsed()) return cmd_compare(cfg);
    if (sc_sim->parsed()) return cmd_simulate(cfg, sim_trace);
    if (sc_rep->parsed()) return cmd_reproduce(cfg, rep_so);
    if (sc_var->parsed()) return cmd_apply_variant(cfg, variant_path, out_file);
    if (sc_lp->parsed()) return cmd_export_lp(cfg, lp_model, lp_out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ModelInfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const AssumptionViolationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAssumption;
  } catch (const AdequacyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAdequacy;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitAdequacy;
  }
  return kExitOk;
}
