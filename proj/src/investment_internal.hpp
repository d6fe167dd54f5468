#pragma once

#include "elmarket/demand_block.hpp"
#include "elmarket/investment.hpp"
#include "elmarket/market_program.hpp"

namespace elmarket::detail {

// Fills dispatch, welfare, costs and producer profits for result.increment.
void finalize_investment(const ScenarioCase& c, InvestmentResult& r);

// Case used by the LP/MILP formulations (quadratic utilities linearized).
ScenarioCase pwl_case(const ScenarioCase& c);

// Largest complementarity product or dual-row residual of one demand block at x.
double demand_block_residual(const MarketProgram& mp, const DemandBlock& b, const std::vector<double>& x);

}  // namespace elmarket::detail
