#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "elmarket/builders.hpp"
#include "elmarket/incentives.hpp"
#include "random_cases.hpp"

using namespace elmarket;

TEST_CASE("Pigouvian tax on the analytical example") {
  const auto c = build_analytical_example();
  const auto d = clear_market(c, MarketMode::optimal);
  const auto tax = pigouvian_tax(c, d);
  CHECK(tax[0][0] == doctest::Approx(0.0));
  CHECK(tax[1][0] == doctest::Approx(12.0));
  CHECK(tax[2][0] == doctest::Approx(16.0));
  for (int t = 0; t < 3; ++t) CHECK(tax[t][1] == 0.0);  // producer 2 emits nothing

  const auto after = clear_market(c, MarketMode::optimal, {0.0, 2.0});
  const auto tax2 = pigouvian_tax(c, after);
  CHECK(tax2[1][0] == doctest::Approx(4.0));
  CHECK(tax2[2][0] == doctest::Approx(16.0));
}

TEST_CASE("subsidy and profits after investment") {
  const auto c = build_analytical_example();
  const auto d = clear_market(c, MarketMode::optimal, {0.0, 2.0});
  const auto r = compute_incentives(c, d);
  const double chi2[3] = {2.0, 12.5, 12.5};
  for (int t = 0; t < 3; ++t) CHECK(r.intervals[t][1].subsidy == doctest::Approx(chi2[t]));
  CHECK(r.intervals[1][1].subsidy - r.intervals[1][0].tax == doctest::Approx(8.5));
  // Producer 1 also earns a subsidy of 0.5 at t=2, so the sum over producers is 9.
  CHECK(r.intervals[1][0].subsidy == doctest::Approx(0.5));
  CHECK(r.net_transfer[1] == doctest::Approx(9.0));
  CHECK(r.horizon_profit(1, ProfitRegime::taxed) == doctest::Approx(45.0));

  const auto before = compute_incentives(c, clear_market(c, MarketMode::optimal));
  CHECK(before.horizon_profit(1, ProfitRegime::taxed) == doctest::Approx(33.0));

  const auto s = scheme_checks(c, d, r);
  CHECK(s.price_independence_residual <= 1e-6);
  CHECK(s.individually_rational[0]);
  CHECK(s.individually_rational[1]);
  for (const auto& row : r.intervals) {
    for (const auto& p : row) {
      CHECK(p.profit_full == doctest::Approx(p.revenue - p.cost - p.tax + p.subsidy));
    }
  }
}

TEST_CASE("closed-form taxed profit of producer 2") {
  const auto c = build_analytical_example();
  for (double k : {3.0, 3.5, 4.0, 4.5, 5.0}) {
    const auto d = clear_market(c, MarketMode::optimal, {0.0, k - 3.0});
    const auto r = compute_incentives(c, d);
    CAPTURE(k);
    CHECK(r.horizon_profit(1, ProfitRegime::taxed) == doctest::Approx(14 * k - k * k));
  }
}

TEST_CASE("zero output gives zero subsidy") {
  const auto c = build_analytical_example();
  const auto d = clear_market(c, MarketMode::optimal);
  const auto r = compute_incentives(c, d);
  CHECK(r.intervals[0][0].output == 0.0);
  CHECK(r.intervals[0][0].subsidy == 0.0);
  CHECK(r.intervals[0][0].profit_full == doctest::Approx(0.0));
}

TEST_CASE("single producer: tax is total damage, subsidy is consumer surplus") {
  for (unsigned seed = 1; seed <= 30; ++seed) {
    auto c = testcases::random_case(seed);
    c.producers.resize(1);
    for (auto& g : c.generators) g.producer = c.producers[0].id;
    const auto d = clear_market(c, MarketMode::optimal);
    REQUIRE(d.ok());
    const auto r = compute_incentives(c, d);
    const auto& iv = d.intervals[0];
    double payment = 0.0;
    for (std::size_t k = 0; k < c.demands.size(); ++k) {
      payment += iv.prices[c.topology.bus_index(c.demands[k].bus)] * iv.consumption[k];
    }
    CAPTURE(seed);
    CHECK(r.intervals[0][0].tax == doctest::Approx(iv.welfare.damage));
    if (c.topology.lines.empty()) {
      // With one price, revenue equals consumer payments.
      CHECK(r.intervals[0][0].subsidy == doctest::Approx(iv.welfare.utility - payment));
    }
  }
}

TEST_CASE("nonnegativity and path equality on random networks") {
  for (unsigned seed = 500; seed < 560; ++seed) {
    const auto c = testcases::random_case(seed, {3, 2, seed % 3 == 0, 0.0});
    const auto d = clear_market(c, MarketMode::optimal);
    REQUIRE(d.ok());
    const auto r = compute_incentives(c, d);
    const auto s = scheme_checks(c, d, r);
    CAPTURE(seed);
    CHECK(s.price_independence_residual <= 1e-6);
    for (const auto& row : r.intervals) {
      for (const auto& p : row) {
        CHECK(p.tax >= -1e-9);
        if (!p.lines_relaxed) CHECK(p.subsidy >= -1e-9);
      }
    }
    for (bool ok : s.individually_rational) CHECK(ok);
  }
}

TEST_CASE("competitive dispatch of the example is not individually rational") {
  const auto c = build_analytical_example();
  const auto d = clear_market(c, MarketMode::competitive);
  const auto r = compute_incentives(c, d);
  const auto s = scheme_checks(c, d, r);
  CHECK_FALSE(s.individually_rational[0]);  // t=1: 16 utility vs 8 cost + 16 damage
  CHECK(s.price_independence_residual <= 1e-6);
}
