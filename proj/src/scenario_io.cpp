#include "elmarket/scenario_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "elmarket/builders.hpp"
#include "json_internal.hpp"

namespace elmarket {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Read access to a JSON node that remembers where it came from.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }
  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Node at(const char* key) const {
    if (!j_.is_object()) fail("expected an object");
    auto it = j_.find(key);
    if (it == j_.end()) throw ScenarioError(child(key) + ": missing field");
    return Node(*it, child(key));
  }
  Node at(std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }
  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  int integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<int>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }
  std::vector<std::string> strings() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).string());
    return out;
  }
  double number_or(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }
  std::string string_or(const char* key, const std::string& fallback) const {
    return has(key) ? at(key).string() : fallback;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ScenarioError(path_ + ": " + what); }

 private:
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& j_;
  std::string path_;
};

PiecewiseLinearCurve read_curve(const Node& n, Curvature curvature) {
  auto bp = n.at("breakpoints").numbers();
  auto sl = n.at("slopes").numbers();
  if (bp.size() != sl.size() + 1) n.fail("needs exactly one more breakpoint than slopes");
  return PiecewiseLinearCurve(std::move(bp), std::move(sl), curvature);
}

ordered_json write_curve(const PiecewiseLinearCurve& c) {
  return {{"breakpoints", c.breakpoints()}, {"slopes", c.slopes()}};
}

UtilityCurve read_utility(const Node& n) {
  if (n.has("quadratic")) {
    const Node q = n.at("quadratic");
    return QuadraticUtility{q.at("linear").number(), q.at("quadratic").number()};
  }
  return read_curve(n, Curvature::concave_nondecreasing);
}

struct Growth {
  double utility = 0.0;  // fraction per step
  double demand = 0.0;
};

// Expands a demand given as base values at t = 1 and compounding growth.
void expand_demand(const Node& n, int horizon, const Growth& g, DemandSpec& d) {
  const double base = n.at("max_consumption_base").number();
  const Node u = n.at("utility_base");
  for (int t = 0; t < horizon; ++t) {
    const double dmax = base * std::pow(1.0 + g.demand, t);
    const double scale = std::pow(1.0 + g.utility, t);
    if (u.has("quadratic")) {
      const Node q = u.at("quadratic");
      d.utility.emplace_back(QuadraticUtility{q.at("linear").number() * scale, q.at("quadratic").number()});
    } else {
      // Equal-width segments over the interval's max consumption.
      const auto slopes = u.at("slopes").numbers();
      if (slopes.empty()) u.fail("needs at least one slope");
      const auto n_seg = slopes.size();
      std::vector<double> bp{0.0}, s;
      for (std::size_t k = 1; k <= n_seg; ++k) bp.push_back(dmax * static_cast<double>(k) / n_seg);
      bp.back() = dmax;
      for (double x : slopes) s.push_back(x * scale);
      d.utility.emplace_back(PiecewiseLinearCurve(bp, s, Curvature::concave_nondecreasing));
    }
    d.max_consumption.push_back(dmax);
  }
}

}  // namespace

namespace detail {

ordered_json case_to_json(const ScenarioCase& c) {
  ordered_json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = c.name;
  j["notes"] = c.notes;
  j["horizon"] = c.grid.horizon;
  const auto& s = c.settings;
  j["settings"] = {{"gamma", s.gamma},
                   {"feasibility_tol", s.feasibility_tol},
                   {"integrality_tol", s.integrality_tol},
                   {"gap_tol", s.gap_tol},
                   {"segments", s.segments},
                   {"segment_width", s.segment_width},
                   {"price_rule", to_string(s.price_rule)}};
  ordered_json net;
  net["buses"] = c.topology.buses;
  net["slack"] = c.topology.slack;
  net["lines"] = ordered_json::array();
  for (const auto& l : c.topology.lines) {
    ordered_json lj = {{"id", l.id}, {"from", l.from}, {"to", l.to}};
    if (l.reactance) lj["reactance"] = *l.reactance;
    lj["rating"] = l.rating;
    net["lines"].push_back(lj);
  }
  if (c.topology.ptdf) {
    const auto& h = *c.topology.ptdf;
    ordered_json rows = ordered_json::array();
    for (std::size_t r = 0; r < h.rows; ++r) {
      std::vector<double> row(h.values.begin() + static_cast<long>(r * h.cols),
                              h.values.begin() + static_cast<long>((r + 1) * h.cols));
      rows.push_back(row);
    }
    net["ptdf"] = rows;
  }
  j["network"] = net;
  j["producers"] = ordered_json::array();
  for (const auto& p : c.producers) {
    j["producers"].push_back({{"id", p.id}, {"fixed_tax", p.fixed_tax}, {"fixed_subsidy", p.fixed_subsidy}});
  }
  j["generators"] = ordered_json::array();
  for (const auto& g : c.generators) {
    ordered_json gj = {{"id", g.id},
                       {"bus", g.bus},
                       {"producer", g.producer},
                       {"technology", to_string(g.technology)},
                       {"capacity", g.capacity},
                       {"cost", write_curve(g.cost)},
                       {"pollution_rate", g.pollution_rate}};
    if (!g.availability.empty()) gj["availability"] = g.availability;
    if (g.ramp_limit) gj["ramp_limit"] = *g.ramp_limit;
    gj["investment_cost"] = g.investment_cost;
    gj["investment_cap"] = g.investment_cap;
    j["generators"].push_back(gj);
  }
  j["demands"] = ordered_json::array();
  for (const auto& d : c.demands) {
    ordered_json u = ordered_json::array();
    for (const auto& curve : d.utility) {
      if (const auto* q = std::get_if<QuadraticUtility>(&curve)) {
        u.push_back({{"quadratic", {{"linear", q->linear}, {"quadratic", q->quadratic}}}});
      } else {
        u.push_back(write_curve(std::get<PiecewiseLinearCurve>(curve)));
      }
    }
    j["demands"].push_back({{"id", d.id}, {"bus", d.bus}, {"max_consumption", d.max_consumption}, {"utility", u}});
  }
  j["damages"] = ordered_json::array();
  for (const auto& dmg : c.externalities.damages) {
    j["damages"].push_back({{"bus", dmg.bus}, {"curve", write_curve(dmg.damage)}});
  }
  return j;
}

ScenarioCase case_from_json(const json& doc) {
  const Node root(doc, "");
  if (!doc.is_object()) root.fail("document must be an object");
  const int version = root.at("schema_version").integer();
  if (version != kScenarioSchemaVersion) {
    throw ScenarioError("schema_version: unsupported version " + std::to_string(version) + " (expected " +
                        std::to_string(kScenarioSchemaVersion) + ")");
  }
  ScenarioCase c;
  c.name = root.string_or("name", "");
  c.notes = root.string_or("notes", "");
  c.grid.horizon = root.at("horizon").integer();

  if (root.has("settings")) {
    const Node s = root.at("settings");
    auto& m = c.settings;
    m.gamma = s.number_or("gamma", m.gamma);
    m.feasibility_tol = s.number_or("feasibility_tol", m.feasibility_tol);
    m.integrality_tol = s.number_or("integrality_tol", m.integrality_tol);
    m.gap_tol = s.number_or("gap_tol", m.gap_tol);
    if (s.has("segments")) m.segments = s.at("segments").integer();
    m.segment_width = s.number_or("segment_width", m.segment_width);
    if (s.has("price_rule")) {
      const Node r = s.at("price_rule");
      const auto rule = price_rule_from_string(r.string());
      if (!rule) r.fail("unknown price rule '" + r.string() + "'");
      m.price_rule = *rule;
    }
  }

  Growth growth;
  if (root.has("growth")) {
    const Node g = root.at("growth");
    growth.utility = g.number_or("utility_pct_per_step", 0.0) / 100.0;
    growth.demand = g.number_or("demand_pct_per_step", 0.0) / 100.0;
  }

  const Node net = root.at("network");
  c.topology.buses = net.at("buses").strings();
  c.topology.slack = net.has("slack") ? net.at("slack").string()
                                      : (c.topology.buses.empty() ? "" : c.topology.buses.front());
  if (net.has("lines")) {
    const Node lines = net.at("lines");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const Node l = lines.at(i);
      LineSpec spec;
      spec.id = l.string_or("id", "L" + std::to_string(i + 1));
      spec.from = l.at("from").string();
      spec.to = l.at("to").string();
      if (l.has("reactance")) spec.reactance = l.at("reactance").number();
      spec.rating = l.at("rating").number();
      c.topology.lines.push_back(spec);
    }
  }
  if (net.has("ptdf")) {
    const Node rows = net.at("ptdf");
    DenseMatrix h(rows.size(), c.topology.buses.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = rows.at(r).numbers();
      if (v.size() != h.cols) rows.at(r).fail("needs one entry per bus");
      for (std::size_t k = 0; k < v.size(); ++k) h(r, k) = v[k];
    }
    c.topology.ptdf = h;
  }

  const Node producers = root.at("producers");
  for (std::size_t i = 0; i < producers.size(); ++i) {
    const Node p = producers.at(i);
    c.producers.push_back({p.at("id").string(), p.number_or("fixed_tax", 0.0), p.number_or("fixed_subsidy", 0.0)});
  }

  const Node gens = root.at("generators");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const Node g = gens.at(i);
    GeneratorSpec spec;
    spec.id = g.at("id").string();
    spec.bus = g.at("bus").string();
    spec.producer = g.at("producer").string();
    if (g.has("technology")) {
      const Node t = g.at("technology");
      const auto tech = technology_from_string(t.string());
      if (!tech) t.fail("unknown technology '" + t.string() + "'");
      spec.technology = *tech;
    }
    spec.capacity = g.at("capacity").number();
    spec.cost = read_curve(g.at("cost"), Curvature::convex_nondecreasing);
    if (g.has("pollution_rate")) {
      const Node r = g.at("pollution_rate");
      spec.pollution_rate = r.raw().is_number() ? std::vector<double>(spec.cost.segment_count(), r.number())
                                                : r.numbers();
    } else {
      spec.pollution_rate.assign(spec.cost.segment_count(), 0.0);
    }
    if (g.has("availability")) spec.availability = g.at("availability").numbers();
    if (g.has("ramp_limit")) spec.ramp_limit = g.at("ramp_limit").number();
    spec.investment_cost = g.number_or("investment_cost", 0.0);
    spec.investment_cap = g.number_or("investment_cap", 0.0);
    c.generators.push_back(std::move(spec));
  }

  const Node demands = root.at("demands");
  for (std::size_t i = 0; i < demands.size(); ++i) {
    const Node d = demands.at(i);
    DemandSpec spec;
    spec.id = d.at("id").string();
    spec.bus = d.at("bus").string();
    if (d.has("utility_base")) {
      expand_demand(d, c.grid.horizon, growth, spec);
    } else {
      spec.max_consumption = d.at("max_consumption").numbers();
      const Node u = d.at("utility");
      for (std::size_t t = 0; t < u.size(); ++t) spec.utility.push_back(read_utility(u.at(t)));
    }
    c.demands.push_back(std::move(spec));
  }

  if (root.has("damages")) {
    const Node dm = root.at("damages");
    for (std::size_t i = 0; i < dm.size(); ++i) {
      const Node d = dm.at(i);
      c.externalities.damages.push_back({d.at("bus").string(), read_curve(d.at("curve"), Curvature::convex_nondecreasing)});
    }
  }
  return c;
}

}  // namespace detail

ScenarioCase parse_scenario(const std::string& text, bool validate) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ScenarioError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                        e.what());
  }
  ScenarioCase c = detail::case_from_json(doc);
  if (validate) {
    auto report = validate_case(c);
    if (!report.ok()) throw ScenarioValidationError(std::move(report));
  }
  return c;
}

ScenarioCase load_scenario(const std::string& path, bool validate) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), validate);
}

std::string scenario_to_string(const ScenarioCase& c) { return detail::case_to_json(c).dump(1) + "\n"; }

void save_scenario(const ScenarioCase& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << scenario_to_string(c);
  if (!out) throw std::runtime_error("write failed: " + path);
}

ScenarioCase load_scenario_or_bundled(const std::string& path_or_name, bool validate) {
  namespace fs = std::filesystem;
  if (fs::exists(path_or_name)) return load_scenario(path_or_name, validate);
  const fs::path bundled = fs::path(default_data_dir()) / (path_or_name + ".json");
  if (path_or_name.find('/') == std::string::npos && fs::exists(bundled)) {
    return load_scenario(bundled.string(), validate);
  }
  throw ScenarioError("no scenario file or bundled case named '" + path_or_name + "'");
}

}  // namespace elmarket
