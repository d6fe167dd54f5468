// One PASS/FAIL line per acceptance criterion, with the measured quantities.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "elmarket/builders.hpp"
#include "elmarket/demand_block.hpp"
#include "elmarket/golden.hpp"
#include "elmarket/incentives.hpp"
#include "elmarket/investment.hpp"
#include "elmarket/market.hpp"
#include "elmarket/market_program.hpp"
#include "random_cases.hpp"

using namespace elmarket;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& id, const std::string& title, const Outcome& o, double seconds) {
  std::printf("[%s] %-3s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id.c_str(), title.c_str(), o.detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Golden checks whose name starts with one of the prefixes.
Outcome golden_subset(const GoldenRun& run, const std::vector<std::string>& prefixes, int* count = nullptr) {
  Outcome o;
  int n = 0;
  std::string bad;
  for (const auto& ck : run.checks) {
    bool selected = false;
    for (const auto& p : prefixes) selected = selected || ck.name.rfind(p, 0) == 0;
    if (!selected) continue;
    ++n;
    if (!ck.pass()) {
      o.pass = false;
      bad += "; " + ck.name + " expected " + fmt("%.6g", ck.expected) + " got " + fmt("%.6g", ck.actual);
    }
  }
  if (count) *count = n;
  o.detail = std::to_string(n) + " values" + (o.pass ? " matched" : " checked" + bad);
  if (n == 0) o.pass = false;
  return o;
}

double horizon_sw(const DispatchResult& d) { return d.total_social_welfare(); }

// Exact single-bus clearing price for one quadratic demand and step supply
// (cost slope plus the damage of each segment's emissions).
double merit_order_price(const ScenarioCase& c, int t) {
  struct Step {
    double price, width;
  };
  std::vector<Step> steps;
  const double damage_slope = c.externalities.damages.front().damage.slopes().front();
  for (const auto& g : c.generators) {
    const auto& bp = g.cost.breakpoints();
    const auto slopes = g.cost.slopes();
    for (std::size_t k = 0; k < slopes.size(); ++k) {
      const double hi = std::min(bp[k + 1], g.capacity);
      if (hi <= bp[k]) break;
      steps.push_back({slopes[k] + g.pollution_rate[k] * damage_slope, hi - bp[k]});
    }
  }
  std::sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) { return a.price < b.price; });
  const auto& q = std::get<QuadraticUtility>(c.demands.front().utility[static_cast<std::size_t>(t)]);
  const double dmax = c.demands.front().max_consumption[static_cast<std::size_t>(t)];
  auto marginal = [&](double d) { return q.linear + 2.0 * q.quadratic * d; };
  double supplied = 0.0;
  for (const auto& s : steps) {
    if (marginal(supplied) <= s.price) return marginal(supplied);  // vertical part of the supply curve
    const double demand_at = std::min(dmax, (s.price - q.linear) / (2.0 * q.quadratic));
    if (demand_at <= supplied + s.width) return s.price;
    supplied += s.width;
  }
  return marginal(std::min(supplied, dmax));
}

}  // namespace

int main() {
  const auto start = Clock::now();
  lp::reset_solve_log();

  Outcome closed_form;
  double closed_form_time = 0.0;

  // 1. Spot market on the analytical example.
  {
    const auto t0 = Clock::now();
    const auto run = run_analytical_example_checks();
    const double elapsed = since(t0);
    const auto ex = build_analytical_example();
    const auto t1 = Clock::now();
    (void)clear_market(ex, MarketMode::optimal);
    (void)clear_market(ex, MarketMode::competitive);
    const double spot_time = since(t1);
    auto o = golden_subset(run, {"spot optimal", "spot competitive"});
    o.pass = o.pass && spot_time < 1.0;
    report("1", "Analytical example, spot market (reference optimal and competitive rows, 1e-6)", o, spot_time);

    // 2. Investment on the analytical example.
    auto o2 = golden_subset(run, {"after investment", "taxed profit", "optimal increment", "strategic"});
    o2.pass = o2.pass && elapsed < 10.0;
    for (const auto& ck : run.checks) {
      if (ck.name == "strategic multiplier tau") o2.detail += ", tau = " + fmt("%.6f", ck.actual);
    }
    report("2", "Analytical example, investment (dk 2 / 0, tau -1, post-investment rows, Y2 45/33)", o2, elapsed);
    closed_form = golden_subset(run, {"horizon SW"});
    closed_form_time = elapsed;
  }

  // 3. Subsidy alignment.
  {
    const auto t0 = Clock::now();
    const auto ex = build_analytical_example();
    const auto with = subsidy_best_response(ex, "2");
    BestResponseOptions taxed;
    taxed.with_subsidy = false;
    const auto without = subsidy_best_response(ex, "2", taxed);
    const auto opt = optimal_investment(ex);
    const double elapsed = since(t0);
    Outcome o;
    const double dk = with.increment[1], dk0 = without.increment[1];
    o.pass = std::abs(dk - 2.0) <= 0.1 + 1e-9 && std::abs(dk - opt.increment[1]) <= 0.1 + 1e-9 &&
             std::abs(dk0) <= 1e-9 && elapsed < 30.0;
    o.detail = "with subsidy dk = " + fmt("%.4f", dk) + " (optimal " + fmt("%.4f", opt.increment[1]) +
               "), without subsidy dk = " + fmt("%.4f", dk0);
    report("3", "Subsidy best response of producer 2 (2 +- 0.1, 0 without subsidy)", o, elapsed);
  }

  // 4. Closed-form welfare curve, from the same golden run.
  report("4", "Closed-form welfare curve 68 + 14k - k^2/2 at k = 3, 4, 5", closed_form, closed_form_time);

  // 5. RTS-24 property suite.
  {
    const auto t0 = Clock::now();
    Outcome a, b, c5, d, e;
    bool strict_welfare = false, mw_differs = false;
    std::ostringstream da, db, dc, dd, de;
    for (unsigned seed = 1; seed <= 3; ++seed) {
      const auto ts = Clock::now();
      const auto c = build_rts24_case(seed);
      const auto comp = clear_market(c, MarketMode::competitive);
      const auto opt = clear_market(c, MarketMode::optimal);
      if (!comp.ok() || !opt.ok()) {
        a.pass = b.pass = c5.pass = d.pass = e.pass = false;
        da << " seed " << seed << " clearing failed;";
        continue;
      }
      // (a) welfare dominance and total gap.
      int sw_bad = 0, price_bad = 0;
      for (std::size_t t = 0; t < opt.intervals.size(); ++t) {
        const double so = opt.intervals[t].welfare.social_welfare, sc = comp.intervals[t].welfare.social_welfare;
        if (so < sc - 1e-7 * (1.0 + std::abs(sc))) ++sw_bad;
        if (average_price(opt.intervals[t]) < average_price(comp.intervals[t]) - 1e-7) ++price_bad;
      }
      const double gap = (horizon_sw(opt) - horizon_sw(comp)) / std::abs(horizon_sw(opt));
      a.pass = a.pass && sw_bad == 0 && gap > 0.0 && gap < 0.02;
      da << " seed " << seed << ": gap " << fmt("%.3f%%", 100.0 * gap) << ", " << sw_bad << " intervals below;";
      b.pass = b.pass && price_bad == 0;
      db << " seed " << seed << ": " << price_bad << " intervals below;";

      // (e) incentive signs and path equality.
      const auto inc = compute_incentives(c, opt);
      const auto checks = scheme_checks(c, opt, inc);
      double min_tax = 0.0, min_sub = 0.0;
      for (const auto& row : inc.intervals) {
        for (const auto& p : row) {
          min_tax = std::min(min_tax, p.tax);
          min_sub = std::min(min_sub, p.subsidy);
        }
      }
      e.pass = e.pass && min_tax >= -1e-9 && min_sub >= -1e-9 && checks.price_independence_residual <= 1e-6;
      de << " seed " << seed << ": min tax " << fmt("%.3g", min_tax) << ", min subsidy " << fmt("%.3g", min_sub)
         << ", residual " << fmt("%.2g", checks.price_independence_residual) << ";";

      // (c), (d) investment.
      const auto oi = optimal_investment(c);
      const auto si = strategic_investment(c);
      if (!oi.ok() || !si.ok()) {
        c5.pass = d.pass = false;
        dc << " seed " << seed << " investment failed;";
        continue;
      }
      const double tol = 1e-7 * (1.0 + std::abs(oi.net_welfare));
      c5.pass = c5.pass && oi.net_welfare >= si.net_welfare - tol;
      strict_welfare = strict_welfare || oi.net_welfare > si.net_welfare + tol;
      dc << " seed " << seed << ": net " << fmt("%.2f", oi.net_welfare) << " vs " << fmt("%.2f", si.net_welfare)
         << " (gross " << fmt("%.2f", oi.welfare) << " vs " << fmt("%.2f", si.welfare) << ");";
      const double rel = std::abs(oi.total_mw() - si.total_mw()) / std::max(oi.total_mw(), si.total_mw());
      mw_differs = mw_differs || rel > 0.10;
      dd << " seed " << seed << ": " << fmt("%.2f", oi.total_mw()) << " vs " << fmt("%.2f", si.total_mw())
         << " MW (" << fmt("%.1f%%", 100.0 * rel) << ");";
      std::printf("      rts24 seed %u done in %.1f s%s\n", seed, since(ts),
                  si.warnings.empty() ? "" : (" (strategic: " + si.warnings.front() + ")").c_str());
      std::fflush(stdout);
    }
    c5.pass = c5.pass && strict_welfare;
    d.pass = d.pass && mw_differs;
    const double elapsed = since(t0);
    const bool in_time = elapsed < 300.0;
    a.detail = da.str();
    b.detail = db.str();
    c5.detail = dc.str();
    d.detail = dd.str();
    e.detail = de.str();
    report("5a", "RTS-24 optimal SW >= competitive SW per interval, total gap in (0, 2%)", a, elapsed);
    report("5b", "RTS-24 average optimal price >= competitive per interval", b, elapsed);
    report("5c", "RTS-24 optimal-investment welfare >= strategic, strictly on one seed", c5, elapsed);
    report("5d", "RTS-24 invested MW differ by more than 10% on one seed", d, elapsed);
    report("5e", "RTS-24 taxes >= 0, subsidies >= 0, path residual <= 1e-6", e, elapsed);
    Outcome t{in_time, "suite total " + fmt("%.1f s", elapsed) + " (limit 300 s)"};
    report("5", "RTS-24 property suite runtime", t, elapsed);
  }

  // 6a. Duality gap over every LP solve of suites 1-5.
  {
    const auto log = lp::solve_log();
    Outcome o;
    o.pass = log.worst_relative_gap <= 1e-6;
    o.detail = std::to_string(log.solves) + " LP solves, " + std::to_string(log.solves - log.optimal) +
               " not optimal (pruned branch-and-bound nodes), worst relative gap over optimal solves " +
               fmt("%.3g", log.worst_relative_gap);
    report("6a", "LP duality gap <= 1e-6 relative on every solve of suites 1-5", o, 0.0);
  }

  // 6b. Demand-equilibrium block against the direct LP.
  {
    const auto t0 = Clock::now();
    Outcome o;
    int agree = 0;
    double worst_u = 0.0;
    for (unsigned seed = 300; seed < 350; ++seed) {
      const auto c = testcases::random_case(seed);
      const auto d = clear_market(c, MarketMode::competitive);
      if (!d.ok()) continue;
      const auto& gen = d.intervals[0].generation;
      auto sb = demand_equilibrium_block(c, 0, 2.0, gen);
      lp::MilpOptions mo;
      mo.heuristic = demand_block_heuristic(c, sb.program, {sb.block});
      const auto rep = lp::solve_milp(sb.program.lp, solver_settings_for(c), mo);
      if (!rep.optimal()) continue;
      double utility = 0.0;
      for (std::size_t k = 0; k < c.demands.size(); ++k) {
        utility += c.demands[k].utility_value(0, sb.program.consumption(rep.primal, 0, static_cast<int>(k)));
      }
      const double lambda = rep.primal[static_cast<std::size_t>(sb.block.lambda)];
      const double target = d.intervals[0].welfare.utility;
      const double du = std::abs(utility - target) / (1.0 + std::abs(target));
      worst_u = std::max(worst_u, du);

      std::vector<std::vector<double>> fixed{gen};
      MarketProgramSpec spec;
      spec.mode = MarketMode::competitive;
      spec.intervals = {0};
      spec.increment = zero_increment(c);
      spec.all_lines = true;
      spec.fixed_output = &fixed;
      const auto direct = build_market_program(c, spec);
      const auto drep = lp::solve_lp(direct.lp);
      if (!drep.optimal()) continue;
      const std::vector<lp::Term> f{{direct.intervals[0].balance_row, 1.0}};
      const auto lo = lp::extreme_dual_value(direct.lp, drep.primal, f, lp::Sense::minimize);
      const auto hi = lp::extreme_dual_value(direct.lp, drep.primal, f, lp::Sense::maximize);
      const bool on_face = (lo || hi) && (!lo || lambda >= *lo - 1e-5) && (!hi || lambda <= *hi + 1e-5);
      if (du <= 1e-5 && on_face) ++agree;
    }
    o.pass = agree == 50;
    o.detail = std::to_string(agree) + "/50 cases agree (utility rel. diff <= " + fmt("%.2g", worst_u) +
               ", block price on the LP dual face)";
    report("6b", "Demand-equilibrium block == direct LP on 50 random cases (1e-5)", o, since(t0));
  }

  // 6c. Investment MILP against the exhaustive grid.
  {
    const auto t0 = Clock::now();
    Outcome o;
    int agree = 0, total = 0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
      const auto c = testcases::small_investment_case(seed);
      if (investing_generators(c).size() > 3) continue;
      ++total;
      InvestmentOptions mo;
      mo.method = InvestmentMethod::milp;
      const auto milp = optimal_investment(c, mo);
      const auto grid = investment_grid_oracle(c, 1.0);
      if (milp.ok() && milp.net_welfare >= grid.best_value - 1e-6 * (1.0 + std::abs(grid.best_value)) &&
          testcases::near_any(milp.increment, grid.argmax, 1.0 + 1e-9)) {
        ++agree;
      }
    }
    o.pass = total > 0 && agree == total;
    o.detail = std::to_string(agree) + "/" + std::to_string(total) +
               " cases within one grid step (1 MW) of a grid argmax, welfare >= grid best";
    report("6c", "Investment MILP == grid oracle on <= 3-generator random cases", o, since(t0));
  }

  // 6d. Tax alignment identity.
  {
    const auto t0 = Clock::now();
    Outcome o;
    int agree = 0;
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 50; ++seed) {
      const auto c = testcases::random_case(seed);
      auto shifted = c;
      bool linear = true;
      for (std::size_t g = 0; g < shifted.generators.size(); ++g) {
        const auto ext = linear_externality_cost(c, static_cast<int>(g));
        if (!ext) {
          linear = false;
          break;
        }
        auto& gen = shifted.generators[g];
        auto slopes = gen.cost.slopes();
        for (std::size_t s = 0; s < slopes.size(); ++s) slopes[s] += (*ext)[s];
        gen.cost = PiecewiseLinearCurve(gen.cost.breakpoints(), slopes, Curvature::convex_nondecreasing);
      }
      if (!linear) continue;
      const auto a = clear_market(c, MarketMode::optimal);
      const auto b = clear_market(shifted, MarketMode::competitive);
      if (!a.ok() || !b.ok()) continue;
      double diff = 0.0;
      for (std::size_t g = 0; g < c.generators.size(); ++g) {
        const double x = a.intervals[0].generation[g], y = b.intervals[0].generation[g];
        diff = std::max(diff, std::abs(x - y) / (1.0 + std::abs(y)));
      }
      worst = std::max(worst, diff);
      if (diff <= 1e-6) ++agree;
    }
    o.pass = agree == 50;
    o.detail = std::to_string(agree) + "/50 cases, worst generation difference " + fmt("%.2g", worst);
    report("6d", "Optimal clearing == cost-shifted competitive clearing on 50 random cases (1e-6)", o, since(t0));
  }

  // 6e. PWL price convergence against the merit-order oracle.
  {
    const auto t0 = Clock::now();
    const auto ex = build_analytical_example();
    auto price_error = [&](int n, PriceRule rule) {
      auto c = ex;
      c.settings.segment_width = 0.0;
      c.settings.segments = n;
      ClearOptions opt;
      opt.price_rule = rule;
      const auto r = clear_market(linearize_utilities(c), MarketMode::optimal, zero_increment(c), opt);
      double err = 0.0;
      for (int t = 0; t < ex.grid.horizon; ++t) {
        err = std::max(err, std::abs(r.intervals[static_cast<std::size_t>(t)].prices[0] - merit_order_price(ex, t)));
      }
      return err;
    };
    const double e50 = price_error(50, PriceRule::midpoint), e100 = price_error(100, PriceRule::midpoint);
    const double r50 = price_error(50, PriceRule::right_hand), r100 = price_error(100, PriceRule::right_hand);
    double oracle_vs_exact = 0.0;
    const auto exact = clear_market(ex, MarketMode::optimal);
    for (int t = 0; t < ex.grid.horizon; ++t) {
      oracle_vs_exact = std::max(
          oracle_vs_exact, std::abs(exact.intervals[static_cast<std::size_t>(t)].prices[0] - merit_order_price(ex, t)));
    }
    Outcome o;
    o.pass = e100 <= 0.5 * e50 + 1e-12 && oracle_vs_exact <= 1e-9;
    o.detail = "midpoint rule max error " + fmt("%.3g", e50) + " (50) -> " + fmt("%.3g", e100) +
               " (100); right-hand rule " + fmt("%.3g", r50) + " -> " + fmt("%.3g", r100) +
               "; exact path vs oracle " + fmt("%.2g", oracle_vs_exact);
    report("6e", "PWL price error at least halves from 50 to 100 segments", o, since(t0));
  }

  std::printf("%d criteria failed, total %.1f s\n", failures, since(start));
  return failures == 0 ? 0 : 1;
}
