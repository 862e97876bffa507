#include "ccmkt/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ccmkt/errors.hpp"

namespace ccmkt {

using nlohmann::json;

int MarketCase::bus_index(const std::string& name) const {
  auto it = bus_index_.find(name);
  return it == bus_index_.end() ? -1 : it->second;
}

double MarketCase::sigma_at(int bus) const {
  int v = vres_of_bus_[bus];
  return v < 0 ? 0.0 : vres[v].sigma;
}

double MarketCase::forecast_at(int bus) const {
  int v = vres_of_bus_[bus];
  return v < 0 ? 0.0 : vres[v].forecast;
}

double MarketCase::schedule_cap_at(int bus) const {
  int v = vres_of_bus_[bus];
  return v < 0 ? 0.0 : vres[v].schedule_cap;
}

double MarketCase::vres_cost_at(int bus) const {
  int v = vres_of_bus_[bus];
  return v < 0 ? 0.0 : vres[v].cost;
}

bool MarketCase::has_vres(int bus) const { return vres_of_bus_[bus] >= 0; }

std::vector<int> MarketCase::generators_at(int bus) const {
  std::vector<int> out;
  for (int i = 0; i < num_generators(); ++i)
    if (bus_index(generators[i].bus) == bus) out.push_back(i);
  return out;
}

std::vector<int> MarketCase::loads_at(int bus) const {
  std::vector<int> out;
  for (int j = 0; j < num_loads(); ++j)
    if (bus_index(loads[j].bus) == bus) out.push_back(j);
  return out;
}

void MarketCase::rebuild_index() {
  bus_index_.clear();
  for (int n = 0; n < num_buses(); ++n) bus_index_.emplace(buses[n], n);
  vres_of_bus_.assign(num_buses(), -1);
  for (int v = 0; v < static_cast<int>(vres.size()); ++v) {
    int n = bus_index(vres[v].bus);
    if (n >= 0) vres_of_bus_[n] = v;
  }
}

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void expect_keys(const json& obj, const std::string& where,
                 const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ParseError(where + ": unknown key '" + it.key() + "'");
}

double num_at(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) throw ParseError(where + ": missing key '" + key + "'");
  if (!obj[key].is_number()) throw ParseError(where + "." + key + ": expected a number");
  return obj[key].get<double>();
}

std::string str_at(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) throw ParseError(where + ": missing key '" + key + "'");
  if (!obj[key].is_string()) throw ParseError(where + "." + key + ": expected a string");
  return obj[key].get<std::string>();
}

DistributionFamily parse_distribution(const json& j, const std::string& where) {
  DistributionFamily d;
  if (j.is_string()) {
    std::string tag = j.get<std::string>();
    if (tag == "normal")
      d.kind = DistributionKind::Normal;
    else if (tag == "uniform-symmetric")
      d.kind = DistributionKind::UniformSymmetric;
    else
      throw ParseError(where + ": unknown distribution tag '" + tag + "'");
    return d;
  }
  if (!j.is_object()) throw ParseError(where + ": expected string or object");
  expect_keys(j, where, {"kind", "quantile_table"});
  std::string tag = str_at(j, where, "kind");
  if (tag == "normal")
    d.kind = DistributionKind::Normal;
  else if (tag == "uniform-symmetric")
    d.kind = DistributionKind::UniformSymmetric;
  else if (tag == "custom-table")
    d.kind = DistributionKind::CustomTable;
  else
    throw ParseError(where + ".kind: unknown distribution tag '" + tag + "'");
  if (j.contains("quantile_table")) {
    if (!j["quantile_table"].is_array())
      throw ParseError(where + ".quantile_table: expected an array");
    for (const auto& row : j["quantile_table"]) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
          !row[1].is_number())
        throw ParseError(where + ".quantile_table: expected [prob, value] pairs");
      d.quantile_table.push_back({row[0].get<double>(), row[1].get<double>()});
    }
  }
  if (d.kind == DistributionKind::CustomTable && d.quantile_table.size() < 2)
    throw ParseError(where + ": custom-table distribution needs a quantile_table");
  return d;
}

}  // namespace

MarketCase parse_network(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("case file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("case file: expected a JSON object");
  expect_keys(doc, "case",
              {"buses", "lines", "generators", "vres", "loads", "epsilon",
               "reference_bus", "distribution"});
  for (const char* key :
       {"buses", "lines", "generators", "vres", "loads", "epsilon", "reference_bus"})
    if (!doc.contains(key))
      throw ParseError(std::string("case: missing key '") + key + "'");

  MarketCase c;
  if (!doc["buses"].is_array()) throw ParseError("case.buses: expected an array");
  for (const auto& b : doc["buses"]) {
    if (!b.is_string()) throw ParseError("case.buses: bus ids must be strings");
    c.buses.push_back(b.get<std::string>());
  }
  if (!doc["lines"].is_array()) throw ParseError("case.lines: expected an array");
  int k = 0;
  for (const auto& l : doc["lines"]) {
    std::string where = "case.lines[" + std::to_string(k++) + "]";
    if (!l.is_object()) throw ParseError(where + ": expected an object");
    expect_keys(l, where, {"from", "to", "susceptance", "capacity"});
    c.lines.push_back(LineRecord{str_at(l, where, "from"), str_at(l, where, "to"),
                                 num_at(l, where, "susceptance"),
                                 num_at(l, where, "capacity")});
  }
  if (!doc["generators"].is_array())
    throw ParseError("case.generators: expected an array");
  k = 0;
  for (const auto& g : doc["generators"]) {
    std::string where = "case.generators[" + std::to_string(k++) + "]";
    if (!g.is_object()) throw ParseError(where + ": expected an object");
    expect_keys(g, where,
                {"id", "bus", "energy_cost", "up_cost", "down_saving", "capacity",
                 "max_up_reserve", "max_down_reserve"});
    c.generators.push_back(Generator{
        str_at(g, where, "id"), str_at(g, where, "bus"),
        num_at(g, where, "energy_cost"), num_at(g, where, "up_cost"),
        num_at(g, where, "down_saving"), num_at(g, where, "capacity"),
        num_at(g, where, "max_up_reserve"), num_at(g, where, "max_down_reserve")});
  }
  if (!doc["vres"].is_array()) throw ParseError("case.vres: expected an array");
  k = 0;
  for (const auto& w : doc["vres"]) {
    std::string where = "case.vres[" + std::to_string(k++) + "]";
    if (!w.is_object()) throw ParseError(where + ": expected an object");
    expect_keys(w, where, {"bus", "cost", "schedule_cap", "forecast", "sigma"});
    c.vres.push_back(VresUnit{str_at(w, where, "bus"), num_at(w, where, "cost"),
                              num_at(w, where, "schedule_cap"),
                              num_at(w, where, "forecast"), num_at(w, where, "sigma")});
  }
  if (!doc["loads"].is_array()) throw ParseError("case.loads: expected an array");
  k = 0;
  for (const auto& l : doc["loads"]) {
    std::string where = "case.loads[" + std::to_string(k++) + "]";
    if (!l.is_object()) throw ParseError(where + ": expected an object");
    expect_keys(l, where, {"id", "bus", "demand", "curtail_cost"});
    c.loads.push_back(Load{str_at(l, where, "id"), str_at(l, where, "bus"),
                           num_at(l, where, "demand"),
                           num_at(l, where, "curtail_cost")});
  }
  if (!doc["epsilon"].is_number()) throw ParseError("case.epsilon: expected a number");
  c.epsilon = doc["epsilon"].get<double>();
  if (!doc["reference_bus"].is_string())
    throw ParseError("case.reference_bus: expected a string");
  c.reference_bus = doc["reference_bus"].get<std::string>();
  if (doc.contains("distribution"))
    c.distribution = parse_distribution(doc["distribution"], "case.distribution");

  validate_case(c);
  return c;
}

MarketCase load_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string serialize(const MarketCase& c) {
  json doc;
  doc["buses"] = c.buses;
  doc["lines"] = json::array();
  for (const auto& l : c.lines)
    doc["lines"].push_back({{"from", l.from},
                            {"to", l.to},
                            {"susceptance", l.susceptance},
                            {"capacity", l.capacity}});
  doc["generators"] = json::array();
  for (const auto& g : c.generators)
    doc["generators"].push_back({{"id", g.id},
                                 {"bus", g.bus},
                                 {"energy_cost", g.energy_cost},
                                 {"up_cost", g.up_cost},
                                 {"down_saving", g.down_saving},
                                 {"capacity", g.capacity},
                                 {"max_up_reserve", g.max_up_reserve},
                                 {"max_down_reserve", g.max_down_reserve}});
  doc["vres"] = json::array();
  for (const auto& w : c.vres)
    doc["vres"].push_back({{"bus", w.bus},
                           {"cost", w.cost},
                           {"schedule_cap", w.schedule_cap},
                           {"forecast", w.forecast},
                           {"sigma", w.sigma}});
  doc["loads"] = json::array();
  for (const auto& l : c.loads)
    doc["loads"].push_back({{"id", l.id},
                            {"bus", l.bus},
                            {"demand", l.demand},
                            {"curtail_cost", l.curtail_cost}});
  doc["epsilon"] = c.epsilon;
  doc["reference_bus"] = c.reference_bus;
  switch (c.distribution.kind) {
    case DistributionKind::Normal:
      doc["distribution"] = "normal";
      break;
    case DistributionKind::UniformSymmetric:
      doc["distribution"] = "uniform-symmetric";
      break;
    case DistributionKind::CustomTable: {
      json t;
      t["kind"] = "custom-table";
      t["quantile_table"] = json::array();
      for (auto [p, v] : c.distribution.quantile_table)
        t["quantile_table"].push_back({p, v});
      doc["distribution"] = t;
      break;
    }
  }
  return doc.dump(2) + "\n";
}

void validate_case(MarketCase& c) {
  std::vector<std::string> issues;
  if (c.buses.empty()) issues.push_back("bus list is empty");
  {
    std::set<std::string> seen;
    for (const auto& b : c.buses)
      if (!seen.insert(b).second) issues.push_back("duplicate bus id '" + b + "'");
  }
  c.rebuild_index();
  if (!c.buses.empty() && c.bus_index(c.reference_bus) < 0)
    issues.push_back("reference bus '" + c.reference_bus + "' is not in the bus list");
  if (!(c.epsilon > 0.0 && c.epsilon < 0.5))
    issues.push_back("epsilon must lie strictly between 0 and 0.5");

  std::set<std::pair<std::string, std::string>> line_pairs;
  for (const auto& l : c.lines) {
    if (c.bus_index(l.from) < 0)
      issues.push_back("line endpoint '" + l.from + "' is not a bus");
    if (c.bus_index(l.to) < 0)
      issues.push_back("line endpoint '" + l.to + "' is not a bus");
    if (l.from == l.to) issues.push_back("line connects bus '" + l.from + "' to itself");
    if (!(std::isfinite(l.susceptance) && l.susceptance > 0.0))
      issues.push_back("line (" + l.from + "," + l.to + ") needs susceptance > 0");
    if (!finite_nonneg(l.capacity))
      issues.push_back("line (" + l.from + "," + l.to + ") needs capacity >= 0");
    auto key = std::minmax(l.from, l.to);
    if (!line_pairs.insert({key.first, key.second}).second)
      issues.push_back("duplicate line between '" + l.from + "' and '" + l.to + "'");
  }

  std::set<std::string> gen_ids;
  for (const auto& g : c.generators) {
    if (!gen_ids.insert(g.id).second)
      issues.push_back("duplicate generator id '" + g.id + "'");
    if (c.bus_index(g.bus) < 0)
      issues.push_back("generator '" + g.id + "' sits at unknown bus '" + g.bus + "'");
    for (auto [v, what] : std::initializer_list<std::pair<double, const char*>>{
             {g.energy_cost, "energy_cost"},
             {g.up_cost, "up_cost"},
             {g.down_saving, "down_saving"},
             {g.capacity, "capacity"},
             {g.max_up_reserve, "max_up_reserve"},
             {g.max_down_reserve, "max_down_reserve"}})
      if (!finite_nonneg(v))
        issues.push_back("generator '" + g.id + "': " + std::string(what) +
                         " must be finite and >= 0");
  }

  std::set<std::string> vres_buses;
  for (const auto& w : c.vres) {
    if (c.bus_index(w.bus) < 0)
      issues.push_back("vres unit sits at unknown bus '" + w.bus + "'");
    if (!vres_buses.insert(w.bus).second)
      issues.push_back("more than one vres unit at bus '" + w.bus +
                       "' (pre-aggregate them)");
    for (auto [v, what] : std::initializer_list<std::pair<double, const char*>>{
             {w.cost, "cost"},
             {w.schedule_cap, "schedule_cap"},
             {w.forecast, "forecast"},
             {w.sigma, "sigma"}})
      if (!finite_nonneg(v))
        issues.push_back("vres at bus '" + w.bus + "': " + std::string(what) +
                         " must be finite and >= 0");
  }

  std::set<std::string> load_ids;
  for (const auto& l : c.loads) {
    if (!load_ids.insert(l.id).second)
      issues.push_back("duplicate load id '" + l.id + "'");
    if (c.bus_index(l.bus) < 0)
      issues.push_back("load '" + l.id + "' sits at unknown bus '" + l.bus + "'");
    if (!finite_nonneg(l.demand))
      issues.push_back("load '" + l.id + "': demand must be finite and >= 0");
    if (!finite_nonneg(l.curtail_cost))
      issues.push_back("load '" + l.id + "': curtail_cost must be finite and >= 0");
  }

  if (c.distribution.kind == DistributionKind::CustomTable) {
    double prev_p = 0.5, prev_v = 0.0;
    bool first = true;
    for (auto [p, v] : c.distribution.quantile_table) {
      if (!(p > 0.5 && p < 1.0))
        issues.push_back("quantile table probabilities must lie in (0.5, 1)");
      if (!first && p <= prev_p)
        issues.push_back("quantile table probabilities must increase");
      if (!first && v < prev_v)
        issues.push_back("quantile table values must be nondecreasing");
      prev_p = p;
      prev_v = v;
      first = false;
    }
  }

  if (!issues.empty()) throw ValidationError(std::move(issues));
  c.rebuild_index();
}

std::vector<std::string> case_warnings(const MarketCase& c) {
  std::vector<std::string> warnings;
  for (const auto& w : c.vres)
    if (w.forecast > w.schedule_cap)
      warnings.push_back("vres at bus '" + w.bus +
                         "': forecast exceeds schedule_cap (allowed; the model bounds "
                         "the schedule, not the forecast)");
  double max_cost = 0;
  for (const auto& g : c.generators) max_cost = std::max(max_cost, g.energy_cost);
  for (const auto& l : c.loads)
    if (l.curtail_cost <= max_cost)
      warnings.push_back("load '" + l.id +
                         "': curtailment cost does not exceed the costliest generator");
  return warnings;
}

CaseVariant parse_variant(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("variant file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("variant: expected a JSON object");
  expect_keys(doc, "variant", {"name", "overrides"});
  CaseVariant v;
  if (doc.contains("name")) v.name = str_at(doc, "variant", "name");
  if (!doc.contains("overrides") || !doc["overrides"].is_array())
    throw ParseError("variant: missing 'overrides' array");
  int k = 0;
  for (const auto& o : doc["overrides"]) {
    std::string where = "variant.overrides[" + std::to_string(k++) + "]";
    if (!o.is_object()) throw ParseError(where + ": expected an object");
    expect_keys(o, where, {"field", "generator", "scale", "set"});
    VariantOverride ov;
    ov.field = str_at(o, where, "field");
    static const std::set<std::string> fields = {"max_up_reserve", "max_down_reserve",
                                                 "up_cost", "down_saving"};
    if (!fields.count(ov.field))
      throw ParseError(where + ".field: '" + ov.field + "' is not overridable");
    if (o.contains("generator")) ov.generator = str_at(o, where, "generator");
    if (o.contains("scale")) ov.scale = num_at(o, where, "scale");
    if (o.contains("set")) ov.set = num_at(o, where, "set");
    if (ov.scale.has_value() == ov.set.has_value())
      throw ParseError(where + ": give exactly one of 'scale' or 'set'");
    v.overrides.push_back(std::move(ov));
  }
  return v;
}

CaseVariant load_variant_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open variant file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_variant(ss.str());
}

MarketCase apply_case_variant(const MarketCase& base, const CaseVariant& variant) {
  MarketCase out = base;
  for (const auto& ov : variant.overrides) {
    std::vector<Generator*> targets;
    if (ov.generator) {
      Generator* hit = nullptr;
      for (auto& g : out.generators)
        if (g.id == *ov.generator) hit = &g;
      if (!hit)
        throw ValidationError({"variant override references unknown generator '" +
                               *ov.generator + "'"});
      targets.push_back(hit);
    } else {
      for (auto& g : out.generators) targets.push_back(&g);
    }
    for (Generator* g : targets) {
      double* slot = nullptr;
      if (ov.field == "max_up_reserve")
        slot = &g->max_up_reserve;
      else if (ov.field == "max_down_reserve")
        slot = &g->max_down_reserve;
      else if (ov.field == "up_cost")
        slot = &g->up_cost;
      else
        slot = &g->down_saving;
      if (ov.scale)
        *slot *= *ov.scale;
      else
        *slot = *ov.set;
    }
  }
  validate_case(out);
  return out;
}

}  // namespace ccmkt
