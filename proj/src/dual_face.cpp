// Extremes of a dual functional over the optimal dual face.
//
// For a maximization with optimal value V(b), the smallest value of d'u over
// all optimal duals u equals the one-sided derivative V'(b; d), and the largest
// equals -V'(b; -d) (signs swap for minimization). The derivative is the
// optimum of a small LP over feasible directions dx: active rows keep their
// relation with right-hand side d, variables on a bound may only move inward.
// That LP has one row per active constraint, far fewer than the dual face LP
// with one row per column.

#include <cmath>

#include "elmarket/lp.hpp"

namespace elmarket::lp {

namespace {

enum class Position { interior, at_lower, at_upper, fixed };

Position classify(double x, double lo, double up) {
  const bool at_lo = std::isfinite(lo) && std::abs(x - lo) <= 1e-8 * (1.0 + std::abs(lo));
  const bool at_up = std::isfinite(up) && std::abs(x - up) <= 1e-8 * (1.0 + std::abs(up));
  if (at_lo && at_up) return Position::fixed;
  if (at_lo) return Position::at_lower;
  if (at_up) return Position::at_upper;
  return Position::interior;
}

// V'(b; d) for direction d given per row.
std::optional<double> directional_derivative(const LinearProgram& lp,
                                             const std::vector<double>& primal,
                                             const std::vector<double>& d,
                                             const SolverSettings& settings) {
  const int n = lp.num_variables();
  LinearProgram cone(lp.sense());
  std::vector<int> col(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    const auto& v = lp.variable(j);
    double lo = -kInfinity, up = kInfinity;
    switch (classify(primal[static_cast<std::size_t>(j)], v.lower, v.upper)) {
      case Position::interior: break;
      case Position::at_lower: lo = 0.0; break;
      case Position::at_upper: up = 0.0; break;
      case Position::fixed: continue;
    }
    col[static_cast<std::size_t>(j)] = cone.add_variable(v.name, lo, up, v.objective);
  }
  for (int i = 0; i < lp.num_constraints(); ++i) {
    const auto& row = lp.constraint(i);
    double activity = 0.0;
    for (const auto& t : row.terms) activity += t.coef * primal[static_cast<std::size_t>(t.var)];
    const double lo = row.relation == Relation::less_equal ? -kInfinity : row.rhs;
    const double up = row.relation == Relation::greater_equal ? kInfinity : row.rhs;
    Relation rel;
    switch (classify(activity, lo, up)) {
      case Position::interior: continue;
      case Position::at_lower: rel = Relation::greater_equal; break;
      case Position::at_upper: rel = Relation::less_equal; break;
      case Position::fixed: rel = Relation::equal; break;
    }
    std::vector<Term> terms;
    for (const auto& t : row.terms) {
      const int c = col[static_cast<std::size_t>(t.var)];
      if (c >= 0) terms.push_back({c, t.coef});
    }
    const double rhs = d[static_cast<std::size_t>(i)];
    if (terms.empty()) {
      const bool ok = rel == Relation::equal        ? std::abs(rhs) <= 1e-12
                      : rel == Relation::less_equal ? rhs >= -1e-12
                                                    : rhs <= 1e-12;
      if (!ok) return std::nullopt;
      continue;
    }
    cone.add_constraint(row.name, std::move(terms), rel, rhs);
  }
  const SolveReport rep = solve_lp(cone, settings);
  if (!rep.optimal()) return std::nullopt;
  return rep.objective;
}

}  // namespace

std::optional<double> extreme_dual_value(const LinearProgram& lp,
                                         const std::vector<double>& primal,
                                         const std::vector<Term>& functional, Sense direction,
                                         const SolverSettings& settings) {
  std::vector<double> d(static_cast<std::size_t>(lp.num_constraints()), 0.0);
  for (const auto& t : functional) d[static_cast<std::size_t>(t.var)] += t.coef;
  // Maximization: V is concave, so V'(b; d) is the minimum over the face.
  const bool forward = (lp.sense() == Sense::maximize) == (direction == Sense::minimize);
  if (forward) return directional_derivative(lp, primal, d, settings);
  for (double& x : d) x = -x;
  const auto r = directional_derivative(lp, primal, d, settings);
  if (!r) return std::nullopt;
  return -*r;
}

}  // namespace elmarket::lp
