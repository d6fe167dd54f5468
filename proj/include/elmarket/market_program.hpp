#pragma once

#include <vector>

#include "elmarket/lp.hpp"
#include "elmarket/market.hpp"
#include "elmarket/model.hpp"

namespace elmarket {

// Options for assembling the market LP over a set of intervals.
struct MarketProgramSpec {
  MarketMode mode = MarketMode::optimal;
  std::vector<int> intervals;  // 0-based t, ascending
  CapacityIncrement increment;  // used when investment_variables is false
  bool investment_variables = false;  // adds one Δk column per generator with investment_cap > 0
  bool capacity_rows = false;  // explicit capacity rows at `increment` for generators that can invest
  bool ramps = true;                  // ramp rows between consecutive included intervals
  bool all_lines = false;             // otherwise line rows are added with add_line()
  const std::vector<std::vector<double>>* fixed_output = nullptr;  // [t][g], NaN = free
};

// Market LP with index maps back to the model. Generation and consumption are
// split into one column per curve segment; capacity truncates segment bounds
// unless Δk columns are present, in which case a capacity row is added.
class MarketProgram {
 public:
  struct Interval {
    int t = 0;
    std::vector<std::vector<int>> gen_seg;  // [g][s] column
    std::vector<std::vector<int>> dem_seg;  // [d][k] column
    std::vector<std::vector<int>> damage_seg;  // [bus][k] column (PWL damage only)
    int balance_row = -1;  // sum d - sum q = 0
    std::vector<int> line_max_row;  // [l], -1 if absent
    std::vector<int> line_min_row;
    std::vector<int> capacity_row;  // [g], -1 if capacity is a bound
  };

  lp::MixedIntegerProgram lp{lp::Sense::maximize};
  std::vector<Interval> intervals;
  std::vector<int> invest_var;  // [g], -1 if none
  DenseMatrix ptdf;             // lines x buses
  std::vector<int> gen_bus;
  std::vector<int> dem_bus;
  std::vector<double> line_rating;

  // Adds the two rating rows of line l at interval position i (no-op if present).
  void add_line(std::size_t i, int l);
  bool has_line(std::size_t i, int l) const { return intervals[i].line_max_row[l] >= 0; }

  double generation(const std::vector<double>& x, std::size_t i, int g) const;
  double consumption(const std::vector<double>& x, std::size_t i, int d) const;
  // Flow on every line at interval position i (computed from injections).
  std::vector<double> flows(const std::vector<double>& x, std::size_t i) const;
  // Dual functional whose value is the nodal price of bus n at interval i.
  std::vector<lp::Term> price_functional(std::size_t i, int n) const;
};

MarketProgram build_market_program(const ScenarioCase& c, const MarketProgramSpec& spec);

// Solver settings with the case tolerances applied.
lp::SolverSettings solver_settings_for(const ScenarioCase& c);

// Solves the program, adding violated line rows until none remain.
lp::SolveReport solve_market_program(const ScenarioCase& c, MarketProgram& mp,
                                     const lp::SolverSettings& settings, SolveStats& stats);

// Lines whose flow exceeds the rating by more than tol.
std::vector<int> violated_lines(const ScenarioCase& c, const std::vector<double>& flows,
                                double tol);

// Fills an IntervalDispatch from an optimal solution of the program, selecting
// prices according to `rule` (dual-face LPs are only solved when the basis is
// degenerate). A non-empty `price_buses` limits the face LPs to those bus
// indices; the other buses keep the basis prices.
IntervalDispatch extract_interval(const ScenarioCase& c, const MarketProgram& mp,
                                  const lp::SolveReport& report, std::size_t i, PriceRule rule,
                                  const lp::SolverSettings& settings,
                                  const std::vector<int>& price_buses = {});

}  // namespace elmarket
