#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "elmarket/builders.hpp"
#include "elmarket/demand_block.hpp"
#include "elmarket/market.hpp"
#include "random_cases.hpp"

using namespace elmarket;

namespace {

ScenarioCase toy(double demand_cap) {
  ScenarioCase c;
  c.topology.buses = {"1"};
  c.topology.slack = "1";
  c.producers = {{"p", 0, 0}};
  GeneratorSpec g;
  g.id = "g";
  g.bus = "1";
  g.producer = "p";
  g.capacity = 10;
  g.cost = PiecewiseLinearCurve::linear(3.0, 10.0, Curvature::convex_nondecreasing);
  g.pollution_rate = {0.0};
  c.generators = {g};
  DemandSpec d;
  d.id = "d";
  d.bus = "1";
  d.utility = {PiecewiseLinearCurve({0, 4, 8}, {12, 5}, Curvature::concave_nondecreasing)};
  d.max_consumption = {demand_cap};
  c.demands = {d};
  return c;
}

struct BlockOutcome {
  lp::SolveReport report;
  double utility = 0.0;
  double lambda = 0.0;
};

BlockOutcome solve_block(const ScenarioCase& c, int t, const std::vector<double>& gen) {
  auto sb = demand_equilibrium_block(c, t, 2.0, gen);
  lp::MilpOptions opt;
  opt.heuristic = demand_block_heuristic(c, sb.program, {sb.block});
  BlockOutcome out;
  out.report = lp::solve_milp(sb.program.lp, solver_settings_for(c), opt);
  if (!out.report.optimal()) return out;
  for (std::size_t d = 0; d < c.demands.size(); ++d) {
    out.utility += c.demands[d].utility_value(t, sb.program.consumption(out.report.primal, 0, static_cast<int>(d)));
  }
  out.lambda = out.report.primal[static_cast<std::size_t>(sb.block.lambda)];
  return out;
}

}  // namespace

TEST_CASE("block reproduces the demand LP on a toy") {
  const auto c = toy(8.0);
  // 6 MW supplied: the second segment is partially used, so the price is 5.
  const auto sb = demand_equilibrium_block(c, 0, 2.0, {6.0});
  const auto rep = lp::solve_milp(sb.program.lp);
  REQUIRE(rep.optimal());
  const auto& x = rep.primal;
  CHECK(sb.program.consumption(x, 0, 0) == doctest::Approx(6.0));
  CHECK(x[sb.block.lambda] == doctest::Approx(5.0));
  CHECK(x[sb.block.mu_dmax[0][0]] == doctest::Approx(7.0));  // b - lambda on the full segment
  CHECK(x[sb.block.z_dmax[0][0]] == doctest::Approx(1.0));
  CHECK(x[sb.block.mu_dmin[0][1]] == doctest::Approx(0.0));

  const auto agg = aggregate_utility(c, 0, {6.0});
  CHECK(agg.price == doctest::Approx(5.0));
}

TEST_CASE("demand at its upper bound binds its max multiplier") {
  const auto c = toy(4.0);
  const auto sb = demand_equilibrium_block(c, 0, 2.0, {4.0});
  const auto rep = lp::solve_milp(sb.program.lp);
  REQUIRE(rep.optimal());
  const auto& x = rep.primal;
  CHECK(x[sb.block.z_dmax[0][0]] == doctest::Approx(1.0));
  CHECK(x[sb.block.mu_dmax[0][0]] == doctest::Approx(12.0 - x[sb.block.lambda]));
  CHECK(x[sb.block.mu_dmax[0][0]] >= -1e-9);
}

TEST_CASE("gamma must exceed one") {
  const auto c = toy(8.0);
  CHECK_THROWS_AS(demand_equilibrium_block(c, 0, 1.0, {6.0}), std::invalid_argument);
}

TEST_CASE("block equals the direct LP on random cases") {
  for (unsigned seed = 300; seed < 350; ++seed) {
    const auto c = testcases::random_case(seed);
    const auto d = clear_market(c, MarketMode::competitive);
    REQUIRE(d.ok());
    const auto& gen = d.intervals[0].generation;
    const auto b = solve_block(c, 0, gen);
    CAPTURE(seed);
    REQUIRE(b.report.optimal());
    std::vector<double> bus(c.topology.buses.size(), 0.0);
    for (std::size_t g = 0; g < gen.size(); ++g) bus[c.topology.bus_index(c.generators[g].bus)] += gen[g];
    const auto agg = aggregate_utility(c, 0, bus);
    REQUIRE(agg.status == lp::Status::optimal);
    CHECK(b.utility == doctest::Approx(agg.utility).epsilon(1e-5));
    CHECK(b.utility == doctest::Approx(d.intervals[0].welfare.utility).epsilon(1e-5));
    // The block's lambda lies on the optimal dual face of the demand LP.
    MarketProgram lp_only = build_market_program(c, [&] {
      MarketProgramSpec spec;
      spec.mode = MarketMode::competitive;
      spec.intervals = {0};
      spec.increment = zero_increment(c);
      spec.all_lines = true;
      static std::vector<std::vector<double>> fixed;
      fixed = {gen};
      spec.fixed_output = &fixed;
      return spec;
    }());
    const auto rep = lp::solve_lp(lp_only.lp);
    REQUIRE(rep.optimal());
    const std::vector<lp::Term> f{{lp_only.intervals[0].balance_row, 1.0}};
    const auto lo = lp::extreme_dual_value(lp_only.lp, rep.primal, f, lp::Sense::minimize);
    const auto hi = lp::extreme_dual_value(lp_only.lp, rep.primal, f, lp::Sense::maximize);
    // No value means the face is unbounded on that side.
    if (lo) CHECK(b.lambda >= *lo - 1e-5);
    if (hi) CHECK(b.lambda <= *hi + 1e-5);
    CHECK((lo || hi));
  }
}

TEST_CASE("RTS interval: block utility equals aggregate utility") {
  const auto c = build_rts24_case(1);
  const auto d = clear_market(c, MarketMode::optimal);
  REQUIRE(d.ok());
  const auto& gen = d.intervals[0].generation;
  const auto b = solve_block(c, 0, gen);
  REQUIRE(b.report.optimal());
  std::vector<double> bus(c.topology.buses.size(), 0.0);
  for (std::size_t g = 0; g < gen.size(); ++g) bus[c.topology.bus_index(c.generators[g].bus)] += gen[g];
  const auto agg = aggregate_utility(c, 0, bus);
  REQUIRE(agg.status == lp::Status::optimal);
  CHECK(std::abs(b.utility - agg.utility) <= 1e-5 * (1.0 + std::abs(agg.utility)));
}
