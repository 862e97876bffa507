#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ccmkt {

enum class DistributionKind { Normal, UniformSymmetric, CustomTable };

// Standardized (zero-mean, unit-variance, symmetric) forecast-error shape.
// CustomTable carries (probability, value) pairs of the standardized
// quantile function for probabilities in (0.5, 1).
struct DistributionFamily {
  DistributionKind kind = DistributionKind::Normal;
  std::vector<std::pair<double, double>> quantile_table;
};

struct LineRecord {
  std::string from, to;   // stored once per unordered pair; limits apply both ways
  double susceptance = 0; // per-unit, > 0
  double capacity = 0;    // MW
};

struct Generator {
  std::string id, bus;
  double energy_cost = 0;      // $/MWh
  double up_cost = 0;          // upward reserve deployment cost
  double down_saving = 0;      // downward reserve deployment saving
  double capacity = 0;         // MW
  double max_up_reserve = 0;   // MW
  double max_down_reserve = 0; // MW
};

struct VresUnit {
  std::string bus;
  double cost = 0;          // $/MWh on net generation
  double schedule_cap = 0;  // MW
  double forecast = 0;      // MW
  double sigma = 0;         // forecast-error std, MW
};

struct Load {
  std::string id, bus;
  double demand = 0;        // scheduled consumption, MW
  double curtail_cost = 0;  // $/MWh
};

struct MarketCase {
  std::vector<std::string> buses;
  std::vector<LineRecord> lines;
  std::vector<Generator> generators;
  std::vector<VresUnit> vres;  // at most one per bus
  std::vector<Load> loads;
  double epsilon = 0.05;
  std::string reference_bus;
  DistributionFamily distribution;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_generators() const { return static_cast<int>(generators.size()); }
  int num_loads() const { return static_cast<int>(loads.size()); }
  int bus_index(const std::string& name) const;  // -1 when absent

  // Per-bus uncertainty view; zero for buses without a VRES unit.
  double sigma_at(int bus) const;
  double forecast_at(int bus) const;
  double schedule_cap_at(int bus) const;
  double vres_cost_at(int bus) const;
  bool has_vres(int bus) const;

  std::vector<int> generators_at(int bus) const;
  std::vector<int> loads_at(int bus) const;

  void rebuild_index();  // called by parse/validate; safe to call again

 private:
  std::unordered_map<std::string, int> bus_index_;
  std::vector<int> vres_of_bus_;  // -1 when none
};

// One override of a generator parameter vector. `field` is one of
// max_up_reserve | max_down_reserve | up_cost | down_saving.
// Without `generator` the override applies to every generator.
struct VariantOverride {
  std::string field;
  std::optional<std::string> generator;
  std::optional<double> scale;
  std::optional<double> set;
};

struct CaseVariant {
  std::string name;
  std::vector<VariantOverride> overrides;
};

// Parses and fully validates a case document (JSON text). Unknown keys are
// rejected; all invariant violations are reported together.
MarketCase parse_network(const std::string& json_text);
MarketCase load_case_file(const std::string& path);
std::string serialize(const MarketCase& c);

CaseVariant parse_variant(const std::string& json_text);
CaseVariant load_variant_file(const std::string& path);

// Returns a revalidated copy with the overrides applied; base is untouched.
MarketCase apply_case_variant(const MarketCase& base, const CaseVariant& variant);

// Throws ValidationError listing every violated invariant.
void validate_case(MarketCase& c);

// Non-fatal observations (forecast above schedule cap, curtailment cost
// below the costliest generator).
std::vector<std::string> case_warnings(const MarketCase& c);

}  // namespace ccmkt
