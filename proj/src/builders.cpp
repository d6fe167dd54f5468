#include "elmarket/builders.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace elmarket {

namespace {

PiecewiseLinearCurve damage_identity(double domain) {
  return PiecewiseLinearCurve::linear(1.0, std::max(domain, 1.0),
                                      Curvature::convex_nondecreasing);
}

struct UnitType {
  double pmax = 0;
  double c2 = 0;
  double c1 = 0;
  Technology technology = Technology::custom;
};

// RTS unit classes mapped onto the six technology labels.
Technology technology_for_unit(const std::string& unit) {
  if (unit == "U12") return Technology::renewable;
  if (unit == "U20") return Technology::fuel_oil;
  if (unit == "U50") return Technology::hydro;
  if (unit == "U76" || unit == "U155" || unit == "U350") return Technology::coal;
  if (unit == "U100" || unit == "U197") return Technology::gas;
  if (unit == "U400") return Technology::nuclear;
  return Technology::custom;
}

double externality_coefficient(Technology t) {
  switch (t) {
    case Technology::coal: return 90.0;
    case Technology::fuel_oil: return 95.0;
    case Technology::gas: return 110.0;
    default: return 0.0;
  }
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bundled data file " + path);
  return nlohmann::json::parse(in);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// Assigns units to producers so every producer ends within [lo, hi] share of
// total capacity. Larger units go first, each to the least-loaded eligible
// producer after a random jitter. Returns false if this draw failed.
bool assign_producers(const std::vector<double>& capacity, int producers, double lo, double hi,
                      std::mt19937_64& rng, std::vector<int>& owner) {
  double total = 0.0;
  for (double c : capacity) total += c;
  std::vector<std::size_t> order(capacity.size());
  std::vector<double> key(capacity.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
    key[i] = uniform01(rng);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (capacity[a] != capacity[b]) return capacity[a] > capacity[b];
    return key[a] < key[b];
  });
  std::vector<double> load(static_cast<std::size_t>(producers), 0.0);
  owner.assign(capacity.size(), -1);
  for (std::size_t u : order) {
    int pick = -1;
    double best = 0.0;
    for (int p = 0; p < producers; ++p) {
      if (load[p] + capacity[u] > hi * total + 1e-9) continue;
      const double score = load[p] + 0.08 * total * uniform01(rng);
      if (pick < 0 || score < best) {
        pick = p;
        best = score;
      }
    }
    if (pick < 0) return false;
    owner[u] = pick;
    load[pick] += capacity[u];
  }
  for (double l : load) {
    if (l < lo * total - 1e-9) return false;
  }
  return true;
}

}  // namespace

std::string default_data_dir() {
  if (const char* env = std::getenv("ELMARKET_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return ELMARKET_DATA_DIR;
}

ScenarioCase build_analytical_example() {
  ScenarioCase c;
  c.name = "analytical_example";
  c.notes =
      "One bus, two producers, three intervals. Quadratic utilities c_t*d - d^2/2 with "
      "c = (6, 12, 20) and max consumption D_t = c_t. Investment cap 6 MW per generator. "
      "segment_width = 1 is used when the utilities are linearized for the investment models.";
  c.topology.buses = {"1"};
  c.topology.slack = "1";
  c.producers = {{"1", 0.0, 0.0}, {"2", 0.0, 0.0}};
  c.grid.horizon = 3;
  const double cap = 6.0;

  GeneratorSpec g1;
  g1.id = "g1";
  g1.bus = "1";
  g1.producer = "1";
  g1.technology = Technology::custom;
  g1.capacity = 4.0;
  g1.investment_cost = 9.0;
  g1.investment_cap = cap;
  g1.cost = PiecewiseLinearCurve::linear(2.0, g1.capacity + cap, Curvature::convex_nondecreasing);
  g1.pollution_rate = {4.0};
  g1.ramp_limit = 1.0;

  GeneratorSpec g2 = g1;
  g2.id = "g2";
  g2.producer = "2";
  g2.capacity = 3.0;
  g2.cost = PiecewiseLinearCurve::linear(4.0, g2.capacity + cap, Curvature::convex_nondecreasing);
  g2.pollution_rate = {0.0};
  c.generators = {g1, g2};

  DemandSpec d;
  d.id = "d1";
  d.bus = "1";
  for (double ct : {6.0, 12.0, 20.0}) {
    d.utility.emplace_back(QuadraticUtility{ct, -0.5});
    d.max_consumption.push_back(ct);
  }
  c.demands = {d};
  c.externalities.damages = {{"1", damage_identity(4.0 * (g1.capacity + cap))}};
  c.settings.segment_width = 1.0;
  return c;
}

ScenarioCase build_rts24_case(unsigned seed, const Rts24Options& opt) {
  const std::string dir = opt.data_dir.empty() ? default_data_dir() : opt.data_dir;
  const nlohmann::json base = read_json(dir + "/rts24_base.json");
  ScenarioCase c;
  c.name = "rts24";
  c.grid.horizon = opt.horizon;
  c.settings.segments = opt.segments;

  for (const auto& b : base.at("buses")) c.topology.buses.push_back(b.at("id").get<std::string>());
  c.topology.slack = "13";
  int line_no = 0;
  for (const auto& br : base.at("branches")) {
    LineSpec l;
    l.id = "L" + std::to_string(++line_no);
    l.from = br.at("from").get<std::string>();
    l.to = br.at("to").get<std::string>();
    l.reactance = br.at("reactance").get<double>();
    l.rating = opt.line_rating_factor * br.at("rating_mw").get<double>();
    c.topology.lines.push_back(l);
  }

  std::map<std::string, UnitType> types;
  for (const auto& [name, u] : base.at("unit_types").items()) {
    types[name] = {u.at("pmax").get<double>(), u.at("c2").get<double>(), u.at("c1").get<double>(),
                   technology_for_unit(name)};
  }

  std::vector<double> bus_emission_domain(c.topology.buses.size(), 0.0);
  int gen_no = 0;
  for (const auto& gj : base.at("generators")) {
    const std::string unit = gj.at("unit").get<std::string>();
    const UnitType& u = types.at(unit);
    GeneratorSpec g;
    g.id = "G" + std::to_string(++gen_no) + "-" + unit;
    g.bus = gj.at("bus").get<std::string>();
    g.technology = u.technology;
    g.capacity = u.pmax;
    g.investment_cost = opt.investment_cost;
    g.investment_cap = opt.investment_cap_share * u.pmax;
    const double domain = std::max(g.capacity + g.investment_cap, 1.0);
    // Renewable units are treated as zero-marginal-cost plant.
    const double c1 = u.technology == Technology::renewable ? 0.0 : u.c1;
    const double c2 = u.technology == Technology::renewable ? 0.0 : u.c2;
    g.cost = pwl_from_quadratic(c1, c2, domain, opt.segments, Curvature::convex_nondecreasing);
    const double rate = externality_coefficient(u.technology);
    g.pollution_rate.assign(static_cast<std::size_t>(opt.segments), rate);
    bus_emission_domain[static_cast<std::size_t>(c.topology.bus_index(g.bus))] += rate * domain;
    c.generators.push_back(g);
  }

  for (const auto& b : base.at("buses")) {
    const double load = b.at("load_mw").get<double>();
    if (load <= 0.0) continue;
    DemandSpec d;
    d.id = "D" + b.at("id").get<std::string>();
    d.bus = b.at("id").get<std::string>();
    for (int t = 0; t < opt.horizon; ++t) {
      const double dmax = load * std::pow(1.0 + opt.demand_growth, t);
      const double scale = std::pow(1.0 + opt.utility_growth, t);
      std::vector<double> bp{0.0}, slopes;
      const auto n = opt.utility_slopes.size();
      for (std::size_t k = 1; k <= n; ++k) bp.push_back(dmax * static_cast<double>(k) / n);
      bp.back() = dmax;
      for (double s : opt.utility_slopes) slopes.push_back(s * scale);
      d.utility.emplace_back(PiecewiseLinearCurve(bp, slopes, Curvature::concave_nondecreasing));
      d.max_consumption.push_back(dmax);
    }
    c.demands.push_back(d);
  }

  for (std::size_t b = 0; b < c.topology.buses.size(); ++b) {
    if (bus_emission_domain[b] > 0.0) {
      c.externalities.damages.push_back({c.topology.buses[b], damage_identity(bus_emission_domain[b])});
    }
  }

  // Producer assignment under the share constraint.
  const int n_producers = 10;
  std::vector<double> cap;
  for (const auto& g : c.generators) cap.push_back(g.capacity);
  std::vector<int> owner;
  int attempt = 0;
  for (;; ++attempt) {
    if (attempt >= 1000) throw std::runtime_error("producer assignment failed for seed " + std::to_string(seed));
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 1000003ULL + static_cast<std::uint64_t>(attempt));
    if (assign_producers(cap, n_producers, 0.06, 0.14, rng, owner)) break;
  }
  for (int p = 1; p <= n_producers; ++p) c.producers.push_back({"P" + std::to_string(p), 0.0, 0.0});
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    c.generators[g].producer = "P" + std::to_string(owner[g] + 1);
  }

  std::ostringstream notes;
  notes << "IEEE RTS-24 variant, assignment seed " << seed;
  if (attempt > 0) notes << " (assignment succeeded on redraw " << attempt << ")";
  notes << ". Line ratings at " << opt.line_rating_factor * 100 << "% of nominal. "
        << "Technology mapping of RTS unit classes: U12 renewable (zero marginal cost), "
           "U20 fuel-oil, U50 hydro, U76/U155/U350 coal, U100/U197 gas, U400 nuclear, "
           "synchronous condenser custom with zero capacity. Externality coefficients "
           "($/MWh): renewable/hydro/nuclear 0, coal 90, fuel-oil 95, gas 110, entered as "
           "pollution rates with damage E(x) = x at every bus. Demand utility: "
        << opt.utility_slopes.size()
        << " equal-width segments of the interval's max consumption with slopes starting at "
        << opt.utility_slopes.front() << " and ending at " << opt.utility_slopes.back()
        << " $/MWh at t=1; the top segments exceed every marginal cost plus externality "
           "while the lowest segments sit below that of the gas and fuel-oil units, so the "
           "two market modes differ. Slopes grow "
        << opt.utility_growth * 100 << "% and max consumption " << opt.demand_growth * 100
        << "% per interval. Investment cost " << opt.investment_cost
        << " $/MW for every technology, cap " << opt.investment_cap_share * 100
        << "% of installed capacity.";
  c.notes = notes.str();
  return c;
}

}  // namespace elmarket
