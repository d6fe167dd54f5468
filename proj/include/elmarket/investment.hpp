#pragma once

#include <string>
#include <vector>

#include "elmarket/incentives.hpp"
#include "elmarket/market.hpp"

namespace elmarket {

enum class InvestmentMethod { automatic, milp, benders };

struct InvestmentOptions {
  InvestmentMethod method = InvestmentMethod::automatic;
  int milp_binary_limit = 600;  // automatic picks the monolithic MILP below this
  int benders_max_iterations = 300;
  // Strategic search: search_points + 1 grid points over [0, cap], then
  // `refine_levels` grids of the same size around the best point. Gauss-Seidel
  // passes over the investing generators stop after `max_sweeps`.
  int search_points = 6;
  int refine_levels = 1;
  int max_sweeps = 3;
  double derivative_step = 1e-3;  // MW, for the tau diagnostic
};

struct InvestmentResult {
  lp::Status status = lp::Status::optimal;
  std::string method;
  std::string message;
  std::vector<std::string> warnings;
  CapacityIncrement increment;  // per generator
  // Per generator: d(objective)/d(increment) from the right minus the cost rate.
  // For strategic results this is the KKT multiplier tau of the lower bound.
  std::vector<double> tau;
  DispatchResult dispatch;       // optimal-market clearing at `increment`
  double welfare = 0.0;          // sum_t SW_t
  double investment_cost = 0.0;  // sum_g c_g dk_g
  double net_welfare = 0.0;      // welfare - investment_cost
  std::vector<double> producer_profit;  // per producer: taxed horizon profit - own investment cost
  double kkt_residual = 0.0;     // largest complementarity / dual residual of demand blocks (MILP only)
  long iterations = 0;           // Benders iterations, B&B nodes or search sweeps
  SolveStats stats;

  bool ok() const { return status == lp::Status::optimal; }
  double total_mw() const;
};

// Welfare-maximizing increments: maximize sum_t SW_t - sum_g c_g dk_g.
InvestmentResult optimal_investment(const ScenarioCase& c, const InvestmentOptions& options = {});

// Capacity game under the Pigouvian tax: every generator's increment is a best
// response maximizing its producer's taxed horizon profit minus investment
// cost, with the market re-cleared at each candidate (Gauss-Seidel to a fixed point).
InvestmentResult strategic_investment(const ScenarioCase& c, const InvestmentOptions& options = {});

// The single-level MILP of the strategic model with each generator's profit
// KKT system linearized by big-M, kept as a reference formulation.
InvestmentResult strategic_investment_milp(const ScenarioCase& c, const InvestmentOptions& options = {});

struct BestResponseOptions {
  bool with_subsidy = true;  // false: taxed profit only
  double grid_step = 0.1;    // MW
  int max_iterations = 60;   // re-clearing rounds for the others' outputs
  CapacityIncrement rivals;  // increments of other producers' generators; empty means zero
};

struct BestResponse {
  CapacityIncrement increment;  // full vector; only the producer's generators change
  std::vector<int> generators;  // indices owned by the producer
  double profit = 0.0;          // at the fixed point, net of investment cost
  int iterations = 0;
  bool converged = false;
};

// Best response of one producer holding the others' outputs fixed at their
// cleared values, iterated until the others' re-cleared outputs settle.
BestResponse subsidy_best_response(const ScenarioCase& c, const std::string& producer,
                                   const BestResponseOptions& options = {});

struct GridOracleResult {
  CapacityIncrement best;
  double best_value = 0.0;                  // net welfare
  std::vector<CapacityIncrement> argmax;    // every grid point within 1e-9 relative of the best
  long evaluations = 0;
};

// Exhaustive net-welfare grid over investing generators (at most 3).
// Ties are broken toward the lexicographically smallest increment.
GridOracleResult investment_grid_oracle(const ScenarioCase& c, double step);

// Result record for a given increment: optimal-market dispatch, welfare,
// investment cost and producer profits (method "fixed").
InvestmentResult evaluate_investment(const ScenarioCase& c, const CapacityIncrement& increment);

// Net welfare of an increment under optimal-market clearing.
double net_welfare(const ScenarioCase& c, const CapacityIncrement& increment);

// Indices of generators with a positive investment cap.
std::vector<int> investing_generators(const ScenarioCase& c);

}  // namespace elmarket
