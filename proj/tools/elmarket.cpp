#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "elmarket/builders.hpp"
#include "elmarket/golden.hpp"
#include "elmarket/incentives.hpp"
#include "elmarket/investment.hpp"
#include "elmarket/market.hpp"
#include "elmarket/results.hpp"
#include "elmarket/scenario_io.hpp"
#include "elmarket/validation.hpp"

using namespace elmarket;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitGolden = 4;
constexpr const char* kOutEnv = "ELMARKET_OUT_DIR";

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string scenario;
  std::string mode;
  std::string out;
  std::optional<double> gamma;
  std::optional<double> tolerance;
  std::optional<unsigned> seed;
  std::optional<int> segments;
  // invest
  std::string method = "automatic";
  double grid_step = 0.1;
  InvestmentOptions investment;
  bool reference_milp = false;
};

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

std::string output_dir(const RunConfig& cfg) {
  if (!cfg.out.empty()) return cfg.out;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return "elmarket_out";
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ScenarioCase load_unvalidated(const RunConfig& cfg) {
  ScenarioCase c;
  if (cfg.seed) {
    if (cfg.scenario != "rts24") throw UsageError("--seed applies to the bundled rts24 case only");
    c = build_rts24_case(*cfg.seed);
  } else {
    c = load_scenario_or_bundled(cfg.scenario, false);
  }
  if (cfg.gamma) c.settings.gamma = *cfg.gamma;
  if (cfg.tolerance) c.settings.feasibility_tol = *cfg.tolerance;
  if (cfg.segments) c.settings.segments = *cfg.segments;
  return c;
}

ScenarioCase load_case(const RunConfig& cfg) {
  auto c = load_unvalidated(cfg);
  auto report = validate_case(c);
  if (!report.ok()) throw ScenarioValidationError(std::move(report));
  return c;
}

RunMetadata metadata_for(const RunConfig& cfg) {
  RunMetadata m;
  m.command = cfg.command;
  m.options.emplace_back("scenario", cfg.scenario);
  if (!cfg.mode.empty()) m.options.emplace_back("mode", cfg.mode);
  if (cfg.gamma) m.options.emplace_back("gamma", format_number(*cfg.gamma));
  if (cfg.tolerance) m.options.emplace_back("tolerance", format_number(*cfg.tolerance));
  if (cfg.seed) m.options.emplace_back("seed", std::to_string(*cfg.seed));
  if (cfg.segments) m.options.emplace_back("segments", std::to_string(*cfg.segments));
  return m;
}

void require_ok(const DispatchResult& d) {
  if (d.status != lp::Status::optimal) {
    throw SolverFailure(std::string(to_string(d.mode)) + " clearing failed: " + d.message);
  }
}

void require_ok(const std::string& label, const InvestmentResult& r) {
  if (!r.ok()) throw SolverFailure(label + " investment failed: " + r.message);
}

void print_spot(const DispatchResult& d) {
  std::printf("%s market\n", to_string(d.mode));
  std::printf("  %3s %12s %12s %12s %14s\n", "t", "generation", "avg price", "damage", "welfare");
  double total = 0.0;
  for (std::size_t t = 0; t < d.intervals.size(); ++t) {
    const auto& iv = d.intervals[t];
    double gen = 0.0;
    for (double q : iv.generation) gen += q;
    std::printf("  %3zu %12.4f %12.4f %12.4f %14.4f\n", t + 1, gen, average_price(iv),
                iv.welfare.damage, iv.welfare.social_welfare);
    total += iv.welfare.social_welfare;
  }
  std::printf("  horizon welfare %.6f\n", total);
}

void print_investment(const ScenarioCase& c, const std::string& label, const InvestmentResult& r) {
  std::printf("%s investment (%s)\n", label.c_str(), r.method.c_str());
  const bool brief = investing_generators(c).size() > 12;  // list only the units that invest
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    if (c.generators[g].investment_cap <= 0.0 || (brief && r.increment[g] == 0.0)) continue;
    std::printf("  %-10s dk %12.4f  tau %12.4f\n", c.generators[g].id.c_str(), r.increment[g], r.tau[g]);
  }
  std::printf("  total %.4f MW, welfare %.6f, investment cost %.6f, net %.6f\n", r.total_mw(), r.welfare,
              r.investment_cost, r.net_welfare);
  for (const auto& w : r.warnings) std::printf("  warning: %s\n", w.c_str());
}

void finish(ResultBundle& b, const RunConfig& cfg) {
  const std::string dir = output_dir(cfg);
  emit_results(b, dir);
  std::printf("results written to %s\n", dir.c_str());
}

int cmd_validate(const RunConfig& cfg) {
  const auto c = load_unvalidated(cfg);
  const auto report = validate_case(c);
  if (!report.ok()) {
    std::cout << report.to_string();
    return kExitValidation;
  }
  std::printf("%s: ok (%zu buses, %zu lines, %zu generators, %zu demands, %d intervals)\n", c.name.c_str(),
              c.topology.buses.size(), c.topology.lines.size(), c.generators.size(), c.demands.size(),
              c.grid.horizon);
  return 0;
}

int cmd_clear(const RunConfig& cfg) {
  const auto c = load_case(cfg);
  ResultBundle b;
  b.scenario = c;
  b.metadata = metadata_for(cfg);
  for (auto mode : {MarketMode::competitive, MarketMode::optimal}) {
    if (cfg.mode != "both" && cfg.mode != to_string(mode)) continue;
    Stopwatch sw;
    auto d = clear_market(c, mode);
    b.metadata.timings.emplace_back(std::string("clear_") + to_string(mode), sw.seconds());
    require_ok(d);
    b.metadata.stats.merge(d.stats);
    print_spot(d);
    b.dispatches.push_back(std::move(d));
  }
  finish(b, cfg);
  return 0;
}

int cmd_incentives(const RunConfig& cfg) {
  const auto c = load_case(cfg);
  ResultBundle b;
  b.scenario = c;
  b.metadata = metadata_for(cfg);
  Stopwatch sw;
  auto d = clear_market(c, MarketMode::optimal);
  require_ok(d);
  const auto rep = compute_incentives(c, d);
  const auto checks = scheme_checks(c, d, rep);
  b.metadata.timings.emplace_back("incentives", sw.seconds());
  b.metadata.stats.merge(d.stats);
  print_spot(d);

  std::printf("producer incentives (horizon totals)\n");
  std::printf("  %-10s %14s %14s %14s %14s %s\n", "producer", "tax", "subsidy", "taxed profit", "full profit",
              "IR");
  for (std::size_t p = 0; p < c.producers.size(); ++p) {
    double tax = 0.0, sub = 0.0;
    for (const auto& row : rep.intervals) {
      tax += row[p].tax + row[p].fixed_tax;
      sub += row[p].subsidy + row[p].fixed_subsidy;
    }
    std::printf("  %-10s %14.4f %14.4f %14.4f %14.4f %s\n", c.producers[p].id.c_str(), tax, sub,
                rep.horizon_profit(p, ProfitRegime::taxed), rep.horizon_profit(p, ProfitRegime::full_scheme),
                checks.individually_rational[p] ? "yes" : "no");
  }
  double net = 0.0;
  for (double x : checks.budget_balance) net += x;
  std::printf("  net transfer to producers %.6f, price-independence residual %.3g\n", net,
              checks.price_independence_residual);

  bool all_ir = true;
  for (bool ir : checks.individually_rational) all_ir = all_ir && ir;
  b.notes.push_back(std::string("individual rationality: ") + (all_ir ? "holds for every producer" : "violated"));
  b.notes.push_back("net transfer to producers over the horizon: " + format_number(net));
  b.notes.push_back("price-independence residual: " + format_number(checks.price_independence_residual));
  b.dispatches.push_back(std::move(d));
  b.incentives = rep;
  finish(b, cfg);
  return 0;
}

InvestmentResult aligned_investment(const ScenarioCase& c, const RunConfig& cfg) {
  BestResponseOptions opt;
  opt.grid_step = cfg.grid_step;
  CapacityIncrement inc(c.generators.size(), 0.0);
  const auto investing = investing_generators(c);
  long passes = 0;
  bool settled = false;
  while (!settled && passes < 10) {
    ++passes;
    settled = true;
    for (const auto& p : c.producers) {
      bool owns = false;
      for (int g : investing) owns = owns || c.generators[g].producer == p.id;
      if (!owns) continue;
      opt.rivals = inc;
      const auto br = subsidy_best_response(c, p.id, opt);
      for (int g : br.generators) {
        if (std::abs(br.increment[g] - inc[g]) > 1e-9) settled = false;
        inc[g] = br.increment[g];
      }
    }
  }
  auto r = evaluate_investment(c, inc);
  r.method = "aligned";
  r.iterations = passes;
  if (!settled) r.warnings.push_back("best-response sweep did not settle in 10 passes");
  return r;
}

int cmd_invest(const RunConfig& cfg) {
  const auto c = load_case(cfg);
  ResultBundle b;
  b.scenario = c;
  b.metadata = metadata_for(cfg);
  b.metadata.options.emplace_back("method", cfg.method);
  InvestmentOptions opt = cfg.investment;
  opt.method = cfg.method == "milp"      ? InvestmentMethod::milp
               : cfg.method == "benders" ? InvestmentMethod::benders
                                         : InvestmentMethod::automatic;
  if (cfg.mode == "strategic" || cfg.mode == "all") {
    b.metadata.options.emplace_back("search_points", std::to_string(opt.search_points));
    b.metadata.options.emplace_back("refine_levels", std::to_string(opt.refine_levels));
    b.metadata.options.emplace_back("max_sweeps", std::to_string(opt.max_sweeps));
  }
  if (cfg.mode == "aligned") b.metadata.options.emplace_back("grid_step", format_number(cfg.grid_step));

  auto run = [&](const std::string& label, auto&& solve) {
    Stopwatch sw;
    auto r = solve();
    b.metadata.timings.emplace_back("invest_" + label, sw.seconds());
    require_ok(label, r);
    b.metadata.stats.merge(r.stats);
    print_investment(c, label, r);
    b.investments.push_back({label, std::move(r)});
  };
  const bool want_optimal = cfg.mode == "optimal" || cfg.mode == "all" || cfg.mode == "aligned";
  if (want_optimal) run("optimal", [&] { return optimal_investment(c, opt); });
  if (cfg.mode == "strategic" || cfg.mode == "all") run("strategic", [&] { return strategic_investment(c, opt); });
  if (cfg.reference_milp) run("strategic_milp", [&] { return strategic_investment_milp(c, opt); });
  if (cfg.mode == "aligned") {
    run("aligned", [&] { return aligned_investment(c, cfg); });
    const auto& o = b.investments.front().result.increment;
    const auto& a = b.investments.back().result.increment;
    double worst = 0.0;
    for (std::size_t g = 0; g < o.size(); ++g) worst = std::max(worst, std::abs(o[g] - a[g]));
    const bool equal = worst <= cfg.grid_step + 1e-9;
    std::printf("subsidy best responses %s the optimal increments (max difference %.4f MW, grid step %g)\n",
                equal ? "match" : "differ from", worst, cfg.grid_step);
    b.notes.push_back(std::string("aligned vs optimal increments: ") + (equal ? "equal" : "different") +
                      " within one grid step (max difference " + format_number(worst) + " MW)");
  }
  if (b.investments.size() >= 2 && cfg.mode == "all") {
    const auto& o = b.investments[0].result;
    const auto& s = b.investments[1].result;
    std::printf("welfare gap optimal - strategic: %.6f (%.4f%%)\n", o.net_welfare - s.net_welfare,
                100.0 * (o.net_welfare - s.net_welfare) / std::abs(o.net_welfare));
  }
  finish(b, cfg);
  return 0;
}

int cmd_example(const RunConfig& cfg) {
  Stopwatch sw;
  auto run = run_analytical_example_checks();
  run.bundle.metadata = metadata_for(cfg);
  run.bundle.metadata.options.front().second = "analytical_example";
  run.bundle.metadata.timings.emplace_back("example", sw.seconds());
  int failed = 0;
  for (const auto& ck : run.checks) {
    const bool ok = ck.pass();
    failed += ok ? 0 : 1;
    std::printf("%s  %-52s expected %12.6f  got %12.6f\n", ok ? "ok  " : "DIFF", ck.name.c_str(), ck.expected,
                ck.actual);
  }
  for (const auto& n : run.bundle.notes) std::printf("note: %s\n", n.c_str());
  for (const auto& ck : run.checks) {
    run.bundle.notes.push_back((ck.pass() ? "match: " : "diff: ") + ck.name + " expected " +
                               format_number(ck.expected) + " got " + format_number(ck.actual));
  }
  finish(run.bundle, cfg);
  if (failed > 0) {
    std::printf("%d of %zu golden values differ\n", failed, run.checks.size());
    return kExitGolden;
  }
  std::printf("all golden values matched (%zu checks)\n", run.checks.size());
  return 0;
}

int cmd_report(const RunConfig& cfg) {
  ResultBundle b;
  try {
    b = load_bundle(cfg.scenario);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: cannot read bundle: %s\n", e.what());
    return kExitValidation;
  }
  for (const auto& d : b.dispatches) print_spot(d);
  for (const auto& r : b.investments) print_investment(b.scenario, r.label, r.result);
  finish(b, cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electricity market simulator: spot clearing with pollution externalities, "
               "Pigouvian taxes, surplus subsidies and generation investment."};
  app.footer(std::string("Scenarios are JSON files or bundled names (analytical_example, rts24).\n"
                         "Results go to --out, else $") +
             kOutEnv + ", else ./elmarket_out.\n"
             "Exit codes: 0 success, 1 usage error, 2 validation failure, 3 solver failure, "
             "4 golden-value mismatch.");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string clear_mode, invest_mode;  // bound separately: CLI11 applies defaults at definition
  auto add_common = [&](CLI::App* sub, bool overrides) {
    sub->add_option("--out", cfg.out, "Output directory (default: $" + std::string(kOutEnv) + " or ./elmarket_out)");
    if (!overrides) return;
    sub->add_option("--gamma", cfg.gamma, "Big-M multiplier gamma (> 1)");
    sub->add_option("--tolerance", cfg.tolerance, "Feasibility tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "Producer assignment seed for the rts24 case");
    sub->add_option("--segments", cfg.segments, "Segments when linearizing quadratic utilities")
        ->check(CLI::PositiveNumber);
  };
  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("scenario", cfg.scenario, "Scenario file or bundled name")->required();
  };

  auto* validate = app.add_subcommand("validate", "Check a scenario and print violations");
  add_scenario(validate);
  add_common(validate, true);

  auto* clear = app.add_subcommand("clear", "Clear the spot market and write spot tables");
  add_scenario(clear);
  add_common(clear, true);
  clear->add_option("--mode", clear_mode, "competitive, optimal or both")
      ->check(CLI::IsMember({"competitive", "optimal", "both"}))
      ->default_val("both");

  auto* incentives = app.add_subcommand("incentives", "Optimal clearing with taxes, subsidies and profits");
  add_scenario(incentives);
  add_common(incentives, true);

  auto* invest = app.add_subcommand("invest", "Solve for capacity increments");
  add_scenario(invest);
  add_common(invest, true);
  invest->add_option("--mode", invest_mode,
                     "optimal, strategic (taxed-profit capacity game), aligned (subsidy best responses) or all")
      ->check(CLI::IsMember({"optimal", "strategic", "aligned", "all"}))
      ->default_val("optimal");
  invest->add_option("--method", cfg.method, "Optimal investment solver: automatic, milp or benders")
      ->check(CLI::IsMember({"automatic", "milp", "benders"}))
      ->default_val("automatic");
  invest->add_option("--search-points", cfg.investment.search_points, "Strategic grid points per search")
      ->check(CLI::PositiveNumber)
      ->default_val(cfg.investment.search_points);
  invest->add_option("--refine-levels", cfg.investment.refine_levels, "Strategic grid refinements")
      ->check(CLI::NonNegativeNumber)
      ->default_val(cfg.investment.refine_levels);
  invest->add_option("--max-sweeps", cfg.investment.max_sweeps, "Strategic Gauss-Seidel sweeps")
      ->check(CLI::PositiveNumber)
      ->default_val(cfg.investment.max_sweeps);
  invest->add_option("--grid-step", cfg.grid_step, "Aligned best-response grid step (MW)")
      ->check(CLI::PositiveNumber)
      ->default_val(cfg.grid_step);
  invest->add_flag("--reference-milp", cfg.reference_milp,
                   "Also solve the single-level big-M strategic MILP (small cases)");

  auto* example = app.add_subcommand("example", "Reproduce the analytical example and diff it against golden values");
  add_common(example, false);

  auto* report = app.add_subcommand("report", "Re-render CSVs and series from a stored bundle.json");
  report->add_option("bundle", cfg.scenario, "Path to bundle.json")->required();
  add_common(report, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
  if (cfg.command == "clear") cfg.mode = clear_mode;
  if (cfg.command == "invest") cfg.mode = invest_mode;

  try {
    if (cfg.command == "validate") return cmd_validate(cfg);
    if (cfg.command == "clear") return cmd_clear(cfg);
    if (cfg.command == "incentives") return cmd_incentives(cfg);
    if (cfg.command == "invest") return cmd_invest(cfg);
    if (cfg.command == "example") return cmd_example(cfg);
    if (cfg.command == "report") return cmd_report(cfg);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ScenarioValidationError& e) {
    std::fprintf(stderr, "%s", e.what());
    return kExitValidation;
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const SolverFailure& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  }
  return kExitUsage;
}
