#pragma once

#include <vector>

#include "elmarket/lp.hpp"
#include "elmarket/market_program.hpp"

namespace elmarket {

// Column and binary indices of one interval's demand equilibrium block.
// Every PWL utility segment acts as its own demand with coefficient b^D.
struct DemandBlock {
  std::size_t interval = 0;  // position in MarketProgram::intervals
  int lambda = -1;
  std::vector<std::vector<int>> mu_dmin, mu_dmax, z_dmin, z_dmax;  // [d][k]
  std::vector<int> mu_lmin, mu_lmax, z_lmin, z_lmax;              // [l]
};

// Appends primal-dual optimality conditions of the demand LP at interval
// position i: dual feasibility b^D = mu^Dmin + mu^Dmax + lambda - sum_l H (mu^Lmin + mu^Lmax),
// sign constraints and eight big-M complementarity families. Adds every line
// row that is still missing. Throws std::invalid_argument if gamma <= 1.
DemandBlock append_demand_equilibrium_block(MarketProgram& mp, const ScenarioCase& c,
                                            std::size_t i, double gamma);

struct StandaloneDemandBlock {
  MarketProgram program;
  DemandBlock block;
};

// Block for interval t with every generator pinned to `generation`.
StandaloneDemandBlock demand_equilibrium_block(const ScenarioCase& c, int t, double gamma,
                                               const std::vector<double>& generation);

// Incumbent proposal for MILPs carrying demand blocks: reads generation from
// the relaxation, solves each demand LP at that generation and sets the
// binaries from the resulting bound and line activity.
lp::IncumbentHeuristic demand_block_heuristic(const ScenarioCase& c, const MarketProgram& mp,
                                              const std::vector<DemandBlock>& blocks);

}  // namespace elmarket
