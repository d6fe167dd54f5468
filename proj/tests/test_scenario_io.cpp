#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "elmarket/builders.hpp"
#include "elmarket/incentives.hpp"
#include "elmarket/results.hpp"
#include "elmarket/scenario_io.hpp"
#include "json.hpp"
#include "random_cases.hpp"

using namespace elmarket;
namespace fs = std::filesystem;

namespace {

std::string data(const std::string& name) { return default_data_dir() + "/" + name; }

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("elmarket_io_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kMinimal = R"({
  "schema_version": 1,
  "horizon": 2,
  "network": {"buses": ["a"]},
  "producers": [{"id": "p"}],
  "generators": [{"id": "g", "bus": "a", "producer": "p", "capacity": 10,
                  "cost": {"breakpoints": [0, 20], "slopes": [5]}, "pollution_rate": 1}],
  "demands": [{"id": "d", "bus": "a", "max_consumption": [8, 9],
               "utility": [{"breakpoints": [0, 10], "slopes": [30]},
                           {"quadratic": {"linear": 40, "quadratic": -1}}]}]
})";

}  // namespace

TEST_CASE("bundled analytical example matches the builder") {
  const auto c = load_scenario(data("analytical_example.json"));
  CHECK(c == build_analytical_example());
  CHECK(c.horizon() == 3);
  const auto& u3 = std::get<QuadraticUtility>(c.demands[0].utility[2]);
  CHECK(u3.linear == 20.0);
  CHECK(c.generators[1].pollution_rate == std::vector<double>{0.0});
  CHECK(c.generators[0].cost.slopes()[0] == 2.0);
  CHECK(c.generators[0].pollution_rate[0] == 4.0);
  CHECK(c.generators[0].capacity == 4.0);
  CHECK(c.generators[1].capacity == 3.0);
  CHECK(c.generators[1].investment_cost == 9.0);
  CHECK(load_scenario_or_bundled("analytical_example") == c);
}

TEST_CASE("bundled RTS-24 file expands its growth rules to the builder case") {
  const auto c = load_scenario(data("rts24.json"));
  CHECK(c == build_rts24_case(0));
  CHECK(c.topology.buses.size() == 24);
  CHECK(c.topology.lines.size() == 38);
  CHECK(c.generators.size() == 33);
  CHECK(c.horizon() == 20);

  std::ifstream in(data("rts24_base.json"));
  const auto base = nlohmann::json::parse(in);
  for (std::size_t l = 0; l < c.topology.lines.size(); ++l) {
    CHECK(c.topology.lines[l].rating == doctest::Approx(0.7 * base["branches"][l]["rating_mw"].get<double>()));
  }
  double cap = 0.0, d1 = 0.0;
  for (const auto& g : c.generators) cap += g.capacity;
  for (const auto& d : c.demands) d1 += d.max_consumption[0];
  CHECK(cap == doctest::Approx(3405.0));
  CHECK(d1 == doctest::Approx(2850.0));
  CHECK(c.demands[0].max_consumption[1] == doctest::Approx(c.demands[0].max_consumption[0] * 1.025));
  const auto& s0 = std::get<PiecewiseLinearCurve>(c.demands[0].utility[0]).slopes();
  const auto& s1 = std::get<PiecewiseLinearCurve>(c.demands[0].utility[1]).slopes();
  CHECK(s1[0] == doctest::Approx(s0[0] * 1.04));
}

TEST_CASE("RTS-24 builder properties") {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const auto c = build_rts24_case(seed);
    CHECK(c == build_rts24_case(seed));
    std::map<std::string, double> share;
    double total = 0.0;
    for (const auto& g : c.generators) {
      share[g.producer] += g.capacity;
      total += g.capacity;
    }
    CHECK(share.size() == 10);
    for (const auto& [p, s] : share) {
      INFO("seed " << seed << " producer " << p);
      CHECK(s / total >= 0.06 - 1e-12);
      CHECK(s / total <= 0.14 + 1e-12);
    }
    CHECK(validate_case(c).ok());
  }
  const auto c = build_rts24_case(1);
  for (const auto& g : c.generators) {
    if (g.technology == Technology::coal) CHECK(g.pollution_rate.front() == 90.0);
    if (g.technology == Technology::gas) CHECK(g.pollution_rate.front() == 110.0);
    if (g.technology == Technology::fuel_oil) CHECK(g.pollution_rate.front() == 95.0);
    if (g.technology == Technology::nuclear) CHECK(g.pollution_rate.front() == 0.0);
  }
}

TEST_CASE("round trip is exact") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    testcases::RandomCaseOptions o;
    o.horizon = 3;
    o.pwl_damage = seed % 2 == 0;
    o.investment_cap = 2.5;
    auto c = testcases::random_case(seed, o);
    c.generators[0].availability = {0.9, 0.75, 1.0 / 3.0};
    c.generators[0].ramp_limit = 0.4;
    c.producers[0].fixed_tax = 0.1;
    CHECK(parse_scenario(scenario_to_string(c), false) == c);
  }
  auto ex = build_analytical_example();
  CHECK(parse_scenario(scenario_to_string(ex)) == ex);

  auto with_ptdf = testcases::random_case(3, {});
  DenseMatrix h(with_ptdf.topology.lines.size(), with_ptdf.topology.buses.size());
  for (std::size_t k = 0; k < h.values.size(); ++k) h.values[k] = 0.1 * static_cast<double>(k) - 0.3;
  with_ptdf.topology.ptdf = h;
  CHECK(parse_scenario(scenario_to_string(with_ptdf), false) == with_ptdf);

  const auto path = fs::temp_directory_path() / "elmarket_roundtrip.json";
  save_scenario(ex, path.string());
  CHECK(load_scenario(path.string()) == ex);
}

TEST_CASE("minimal document and defaults") {
  const auto c = parse_scenario(kMinimal);
  CHECK(c.topology.slack == "a");
  CHECK(c.generators[0].pollution_rate == std::vector<double>{1.0});
  CHECK(c.settings.gamma == 2.0);
  CHECK(c.demands[0].is_quadratic(1));
  CHECK(!c.demands[0].is_quadratic(0));
}

TEST_CASE("growth rules") {
  auto j = nlohmann::json::parse(kMinimal);
  j["horizon"] = 3;
  j["growth"] = {{"utility_pct_per_step", 10.0}, {"demand_pct_per_step", 50.0}};
  j["demands"][0] = {{"id", "d"}, {"bus", "a"}, {"max_consumption_base", 4.0}, {"utility_base", {{"slopes", {30.0, 20.0}}}}};
  const auto c = parse_scenario(j.dump());
  const auto& d = c.demands[0];
  CHECK(d.max_consumption == std::vector<double>{4.0, 6.0, 9.0});
  const auto& u2 = std::get<PiecewiseLinearCurve>(d.utility[2]);
  CHECK(u2.breakpoints() == std::vector<double>{0.0, 4.5, 9.0});
  CHECK(u2.slopes()[0] == doctest::Approx(30.0 * 1.21));
  CHECK(u2.slopes()[1] == doctest::Approx(20.0 * 1.21));
}

TEST_CASE("errors name the offending line or field") {
  try {
    parse_scenario("{\n  \"schema_version\": 1,\n  \"horizon\": ,\n}");
    FAIL("expected a parse error");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  auto j = nlohmann::json::parse(kMinimal);
  j["generators"][0].erase("capacity");
  try {
    parse_scenario(j.dump());
    FAIL("expected a field error");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("generators[0].capacity") != std::string::npos);
  }
  j = nlohmann::json::parse(kMinimal);
  j["generators"][0]["capacity"] = "ten";
  CHECK_THROWS_WITH_AS(parse_scenario(j.dump()), doctest::Contains("expected a number"), ScenarioError);
  j = nlohmann::json::parse(kMinimal);
  j["schema_version"] = 2;
  CHECK_THROWS_WITH_AS(parse_scenario(j.dump()), doctest::Contains("unsupported version"), ScenarioError);

  j = nlohmann::json::parse(kMinimal);
  j["generators"][0]["capacity"] = -1.0;
  try {
    parse_scenario(j.dump());
    FAIL("expected a validation error");
  } catch (const ScenarioValidationError& e) {
    REQUIRE(!e.report.ok());
    CHECK(e.report.violations[0].entity == "g");
  }
  CHECK_NOTHROW(parse_scenario(j.dump(), false));
  CHECK_THROWS_AS(load_scenario_or_bundled("no_such_case"), ScenarioError);
}

TEST_CASE("result emission") {
  const auto c = build_analytical_example();
  ResultBundle b;
  b.scenario = c;
  b.dispatches = {clear_market(c, MarketMode::competitive), clear_market(c, MarketMode::optimal)};
  b.incentives = compute_incentives(c, b.dispatches[1]);
  InvestmentRun run{"optimal", optimal_investment(c)};
  b.investments = {run};
  b.notes = {"test"};
  b.metadata.command = "test";
  const auto dir = scratch_dir("example");
  emit_results(b, dir.string());

  const auto spot = read_csv(dir / "spot.csv");
  REQUIRE(spot.size() == 7);
  CHECK(spot[0][0] == "mode");
  bool found = false;
  double sw_total = 0.0;
  for (std::size_t r = 1; r < spot.size(); ++r) {
    if (spot[r][0] == "optimal") sw_total += std::stod(spot[r][8]);
    if (spot[r][0] == "optimal" && spot[r][1] == "2") {
      found = true;
      CHECK(std::stod(spot[r][4]) == doctest::Approx(6.0));
      CHECK(std::stod(spot[r][8]) == doctest::Approx(24.0));
    }
  }
  CHECK(found);
  CHECK(std::abs(sw_total - b.dispatches[1].total_social_welfare()) <= 1e-9);

  const auto inc = read_csv(dir / "incentives.csv");
  CHECK(inc.size() == 1 + 3 * 2);
  double tax = 0.0;
  for (std::size_t r = 1; r < inc.size(); ++r) tax += std::stod(inc[r][6]);
  CHECK(std::abs(tax - 28.0) <= 1e-9);
  for (const char* f : {"generation.csv", "consumption.csv", "prices.csv", "flows.csv", "investment.csv",
                        "invest_spot.csv", "summary.json", "bundle.json", "series/average_price_optimal.dat",
                        "series/tax.dat", "series/subsidy.dat", "series/profit_full_2.dat"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["investment"][0]["increment"]["g2"].get<double>() == doctest::Approx(2.0));

  // A stored bundle re-renders to identical files.
  const auto again = scratch_dir("example_again");
  emit_results(load_bundle((dir / "bundle.json").string()), again.string());
  for (const char* f : {"spot.csv", "incentives.csv", "investment.csv", "prices.csv", "summary.json"}) {
    CHECK_MESSAGE(slurp(dir / f) == slurp(again / f), f);
  }
  CHECK_THROWS(bundle_from_string("{\"bundle_version\": 7}"));
}

TEST_CASE("empty runs give header-only tables") {
  ResultBundle b;
  b.scenario = build_analytical_example();
  DispatchResult empty;
  b.dispatches = {empty};
  const auto dir = scratch_dir("empty");
  emit_results(b, dir.string());
  for (const char* f : {"spot.csv", "generation.csv", "incentives.csv", "investment.csv"}) {
    CHECK(read_csv(dir / f).size() == 1);
  }
}

TEST_CASE("RTS-24 series have one row per interval and mode") {
  const auto c = build_rts24_case(0);
  ResultBundle b;
  b.scenario = c;
  b.dispatches = {clear_market(c, MarketMode::competitive), clear_market(c, MarketMode::optimal)};
  const auto dir = scratch_dir("rts");
  emit_results(b, dir.string());
  for (const char* mode : {"competitive", "optimal"}) {
    const auto rows = read_csv(dir / "series" / (std::string("average_price_") + mode + ".dat"));
    CHECK(rows.size() == 20);
  }
  const auto spot = read_csv(dir / "spot.csv");
  CHECK(spot.size() == 41);
  double gen = 0.0;
  for (std::size_t r = 1; r < spot.size(); ++r) {
    if (spot[r][0] == "optimal") gen += std::stod(spot[r][2]);
  }
  double mem = 0.0;
  for (int t = 0; t < c.horizon(); ++t) mem += b.dispatches[1].total_generation(t);
  CHECK(std::abs(gen - mem) <= 1e-9 * (1.0 + mem));
}
