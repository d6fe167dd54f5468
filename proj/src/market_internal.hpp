#pragma once

#include "elmarket/market.hpp"

namespace elmarket::detail {

// Empty string when the exact merit-order path applies to this case and mode.
std::string exact_path_obstacle(const ScenarioCase& c, MarketMode mode);

DispatchResult clear_market_exact(const ScenarioCase& c, MarketMode mode,
                                  const CapacityIncrement& increment,
                                  const ClearOptions& options);

// Aggregate quadratic demand at one interval of a single-bus case.
AggregateUtility aggregate_utility_exact(const ScenarioCase& c, int t, double generation);

inline bool is_fixed(const std::vector<std::vector<double>>* fixed, int t, int g) {
  if (fixed == nullptr || fixed->empty()) return false;
  const auto& row = (*fixed)[static_cast<std::size_t>(t)];
  return !row.empty() && !std::isnan(row[static_cast<std::size_t>(g)]);
}

}  // namespace elmarket::detail
