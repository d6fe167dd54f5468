#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elmarket/incentives.hpp"
#include "elmarket/investment.hpp"
#include "elmarket/market.hpp"
#include "elmarket/model.hpp"

namespace elmarket {

struct RunMetadata {
  std::string command;
  std::vector<std::pair<std::string, std::string>> options;
  std::vector<std::pair<std::string, double>> timings;  // seconds
  SolveStats stats;
};

struct InvestmentRun {
  std::string label;  // "optimal", "strategic", ...
  InvestmentResult result;
};

struct ResultBundle {
  ScenarioCase scenario;
  std::vector<DispatchResult> dispatches;    // spot runs, at most one per mode
  std::optional<IncentiveReport> incentives;  // for the optimal-mode spot run
  std::vector<InvestmentRun> investments;
  std::vector<std::string> notes;
  RunMetadata metadata;
};

// Unweighted mean of the nodal prices.
double average_price(const IntervalDispatch& iv);

// Writes into `dir` (created if needed):
//   spot.csv         mode,t,generation,consumption,average_price,utility,cost,damage,social_welfare
//   generation.csv   run,t,generator,producer,bus,output
//   consumption.csv  run,t,demand,bus,consumption
//   prices.csv       run,t,bus,price,price_low,price_high
//   flows.csv        run,t,line,flow,rating
//   incentives.csv   t,producer,output,emissions,revenue,cost,tax,subsidy,fixed_tax,fixed_subsidy,
//                    profit_competitive,profit_taxed,profit_full,profit_full_direct,lines_relaxed
//   investment.csv   run,generator,producer,increment,tau
//   invest_spot.csv  run,t,generation,consumption,average_price,utility,cost,damage,social_welfare
//   summary.json     totals, investment summaries, notes and run metadata
//   bundle.json      everything above in machine-readable form (input of load_bundle)
//   series/*.dat     two-column "t value" trajectories
// Files whose section is absent from the bundle are written with a header only.
void emit_results(const ResultBundle& bundle, const std::string& dir);

std::string bundle_to_string(const ResultBundle& bundle);
ResultBundle bundle_from_string(const std::string& text);
ResultBundle load_bundle(const std::string& path);

}  // namespace elmarket
