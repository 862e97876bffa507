#pragma once

// Shared fixtures for the test binaries: the bundled three-bus case, its
// variants, and a generator of random feasible market cases.

#include <random>
#include <string>

#include "ccmkt/clearing.hpp"
#include "ccmkt/netmodel.hpp"

namespace ccmkt::testing {

inline MarketCase case1() { return load_case_file("cases/case1.json"); }

inline MarketCase case_variant(int which) {
  MarketCase base = case1();
  auto v = load_variant_file("cases/variants/case" + std::to_string(which) +
                             ".variant.json");
  return apply_case_variant(base, v);
}

// Random 2-5 bus networks with enough headroom to clear. The caller retries
// on infeasibility; most draws are feasible by construction.
inline MarketCase random_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nbus(2, 5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  MarketCase c;
  int B = nbus(rng);
  for (int n = 0; n < B; ++n) c.buses.push_back("b" + std::to_string(n));
  c.reference_bus = "b0";
  c.epsilon = 0.01 + 0.2 * u01(rng);
  c.distribution.kind = DistributionKind::Normal;
  // spanning chain plus a few chords
  for (int n = 1; n < B; ++n)
    c.lines.push_back({"b" + std::to_string(n - 1), "b" + std::to_string(n),
                       2.0 + 8.0 * u01(rng), 60.0 + 200.0 * u01(rng)});
  if (B >= 3 && u01(rng) < 0.6)
    c.lines.push_back({"b0", "b" + std::to_string(B - 1), 2.0 + 8.0 * u01(rng),
                       60.0 + 200.0 * u01(rng)});
  double total_load = 0.0;
  int J = 1 + static_cast<int>(rng() % 2);
  for (int j = 0; j < J; ++j) {
    double demand = 30.0 + 120.0 * u01(rng);
    total_load += demand;
    c.loads.push_back({"load" + std::to_string(j),
                       "b" + std::to_string(rng() % B), demand,
                       90.0 + 60.0 * u01(rng)});
  }
  int I = 2 + static_cast<int>(rng() % 3);
  for (int i = 0; i < I; ++i) {
    Generator g;
    g.id = "gen" + std::to_string(i);
    g.bus = "b" + std::to_string(rng() % B);
    g.energy_cost = 10.0 + 35.0 * u01(rng);
    g.up_cost = g.energy_cost * (0.8 + 0.5 * u01(rng));
    g.down_saving = g.energy_cost * (0.6 + 0.5 * u01(rng));
    g.capacity = 1.2 * total_load / I + 80.0 * u01(rng);
    g.max_up_reserve = 15.0 + 30.0 * u01(rng);
    g.max_down_reserve = 15.0 + 30.0 * u01(rng);
    c.generators.push_back(g);
  }
  int nw = 1 + static_cast<int>(rng() % 2);
  for (int w = 0; w < nw && w < B; ++w) {
    VresUnit v;
    v.bus = "b" + std::to_string(w % B);
    v.cost = u01(rng) < 0.5 ? 0.0 : 3.0 * u01(rng);
    v.forecast = 15.0 + 40.0 * u01(rng);
    v.schedule_cap = v.forecast * (0.9 + 0.3 * u01(rng));
    v.sigma = v.forecast * (0.05 + 0.15 * u01(rng));
    c.vres.push_back(v);
  }
  validate_case(c);
  return c;
}

}  // namespace ccmkt::testing
