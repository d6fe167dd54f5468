#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elmarket/lp.hpp"
#include "elmarket/model.hpp"

namespace elmarket {

enum class MarketMode { competitive, optimal };
const char* to_string(MarketMode m);
std::optional<MarketMode> market_mode_from_string(std::string_view s);

struct WelfareBreakdown {
  double utility = 0.0;
  double cost = 0.0;
  double damage = 0.0;
  double social_welfare = 0.0;  // utility - cost - damage, damage always included
};

struct IntervalDispatch {
  std::vector<double> generation;   // per generator, MW
  std::vector<double> consumption;  // per demand, MW
  std::vector<double> flows;        // per line, MW (from -> to positive)
  std::vector<double> prices;       // per bus, $/MWh (selected by the price rule)
  std::vector<double> price_low;    // per bus, smallest dual-optimal price
  std::vector<double> price_high;   // per bus, largest dual-optimal price
  double balance_dual = 0.0;        // lambda_t of the returned basis
  std::vector<double> line_dual_min;  // mu^Lmin <= 0 per line
  std::vector<double> line_dual_max;  // mu^Lmax >= 0 per line
  WelfareBreakdown welfare;
};

struct SolveStats {
  long lp_solves = 0;
  long simplex_iterations = 0;
  double worst_duality_gap = 0.0;      // relative: gap / (1 + |objective|)
  double worst_primal_residual = 0.0;
  void merge(const lp::SolveReport& r);
  void merge(const SolveStats& s);
};

struct DispatchResult {
  MarketMode mode = MarketMode::optimal;
  CapacityIncrement increment;
  lp::Status status = lp::Status::optimal;
  std::string message;
  bool exact = false;  // solved by the closed-form merit-order path
  std::vector<IntervalDispatch> intervals;
  SolveStats stats;

  bool ok() const { return status == lp::Status::optimal; }
  double total_social_welfare() const;
  double total_generation(int t) const;
};

struct ClearOptions {
  // fixed_output[t][g]: output pinned to this value; NaN leaves it free.
  std::vector<std::vector<double>> fixed_output;
  std::optional<PriceRule> price_rule;  // overrides case.settings.price_rule
  // When non-empty, only these intervals are cleared (others stay empty).
  // Ignored when ramp limits couple the horizon.
  std::vector<int> only_intervals;
  // seed_lines[t]: line rows added up front instead of on violation.
  std::vector<std::vector<int>> seed_lines;
  // Bus indices whose prices follow the price rule; others keep the basis
  // prices. Empty means every bus. Ignored by the exact path.
  std::vector<int> price_buses;
  lp::SolverSettings solver;
};

// Clears every interval. Quadratic utilities use the exact merit-order path,
// which needs a single bus, linear damage and no binding ramp limits.
DispatchResult clear_market(const ScenarioCase& c, MarketMode mode,
                            const CapacityIncrement& increment, const ClearOptions& options = {});
DispatchResult clear_market(const ScenarioCase& c, MarketMode mode);

// Pr_n = lambda - sum_l H(l,n) (mu_min_l + mu_max_l).
std::vector<double> nodal_prices(double balance_dual, const std::vector<double>& line_dual_min,
                                 const std::vector<double>& line_dual_max, const DenseMatrix& ptdf);

struct AggregateUtility {
  lp::Status status = lp::Status::optimal;
  double utility = 0.0;
  std::vector<double> consumption;  // per demand
  bool lines_relaxed = false;       // line limits had to be relaxed with a penalty
  double price = 0.0;               // marginal utility at the optimum (right-hand)
};

// max sum_n U_tn(d_tn) against a fixed generation vector (per bus, MW).
AggregateUtility aggregate_utility(const ScenarioCase& c, int t,
                                   const std::vector<double>& generation_by_bus,
                                   const lp::SolverSettings& solver = {});

std::vector<WelfareBreakdown> evaluate_welfare(const ScenarioCase& c, const DispatchResult& d);
WelfareBreakdown evaluate_interval_welfare(const ScenarioCase& c, int t,
                                           const std::vector<double>& generation,
                                           const std::vector<double>& consumption);

// Total emissions per bus at the given generation (per generator).
std::vector<double> bus_emissions(const ScenarioCase& c, const std::vector<double>& generation);
double total_damage(const ScenarioCase& c, const std::vector<double>& emissions_by_bus);

struct MeritStep {
  double marginal_cost = 0.0;  // incl. externality when the caller wants it
  double capacity = 0.0;
};

struct AffineClearing {
  std::vector<double> dispatch;  // per merit step
  double quantity = 0.0;
  double price = 0.0;
  double social_welfare = 0.0;   // utility - sum(marginal_cost * dispatch)
};

// Closed-form intersection of step supply with marginal utility c - d,
// consumption capped at d_max (pass infinity for none).
AffineClearing single_bus_affine_clearing(const std::vector<MeritStep>& merit, double c,
                                          double d_max = lp::kInfinity);

// Marginal externality cost per segment of generator g: damage slope at its
// bus times the segment's pollution rate. Empty optional if the bus damage is
// not linear.
std::optional<std::vector<double>> linear_externality_cost(const ScenarioCase& c, int g);

}  // namespace elmarket
