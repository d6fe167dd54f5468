// Best-first branch and bound over binary variables.

#include <algorithm>
#include <cmath>
#include <queue>

#include "elmarket/lp.hpp"

namespace elmarket::lp {

namespace {

struct Node {
  double bound = 0.0;  // in maximization orientation
  long order = 0;
  std::vector<std::pair<int, double>> fixings;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.order > b.order;
  }
};

LinearProgram with_fixings(const LinearProgram& base,
                           const std::vector<std::pair<int, double>>& fixings) {
  LinearProgram lp = base;
  for (const auto& [var, value] : fixings) lp.set_bounds(var, value, value);
  return lp;
}

}  // namespace

SolveReport solve_milp(const MixedIntegerProgram& mip, const SolverSettings& settings,
                       const MilpOptions& options) {
  const double orient = mip.sense() == Sense::maximize ? 1.0 : -1.0;
  const std::vector<int> binaries = mip.binary_variables();
  const LinearProgram& base = mip;

  SolveReport best;
  best.settings = settings;
  best.status = Status::infeasible;
  bool have_incumbent = false;
  double incumbent = -kInfinity;  // maximization orientation
  long nodes = 0;
  long iterations = 0;
  long order = 0;

  auto integral = [&](const std::vector<double>& x) {
    for (int b : binaries) {
      const double v = x[static_cast<std::size_t>(b)];
      if (std::min(v, 1.0 - v) > settings.integrality_tol) return false;
    }
    return true;
  };
  auto accept = [&](SolveReport rep) {
    for (int b : binaries) {
      auto& v = rep.primal[static_cast<std::size_t>(b)];
      v = std::round(v);
    }
    const double value = orient * rep.objective;
    if (!have_incumbent || value > incumbent + 1e-12) {
      incumbent = value;
      have_incumbent = true;
      best = std::move(rep);
      best.has_duals = false;
      best.duals.clear();
      best.reduced_costs.clear();
    }
  };
  auto try_heuristic = [&](const SolveReport& relax) {
    if (!options.heuristic) return;
    auto proposal = options.heuristic(relax);
    if (!proposal) return;
    std::vector<std::pair<int, double>> fix;
    for (int b : binaries) fix.emplace_back(b, std::round((*proposal)[static_cast<std::size_t>(b)]));
    SolveReport rep = solve_lp(with_fixings(base, fix), settings);
    iterations += rep.iterations;
    if (rep.optimal()) accept(std::move(rep));
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push(Node{kInfinity, order++, {}});
  bool unbounded = false;
  bool hit_limit = false;

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (have_incumbent && node.bound <= incumbent + settings.gap_tol) continue;
    if (nodes >= settings.node_limit) {
      hit_limit = true;
      break;
    }
    ++nodes;
    SolveReport rep = solve_lp(with_fixings(base, node.fixings), settings);
    iterations += rep.iterations;
    if (rep.status == Status::unbounded) {
      unbounded = true;
      break;
    }
    if (!rep.optimal()) continue;
    const double bound = orient * rep.objective;
    if (have_incumbent && bound <= incumbent + settings.gap_tol) continue;
    if (integral(rep.primal)) {
      accept(std::move(rep));
      continue;
    }
    if (nodes == 1 || node.fixings.size() % 8 == 0) try_heuristic(rep);
    if (have_incumbent && bound <= incumbent + settings.gap_tol) continue;

    int branch = -1;
    double frac_best = -1.0;
    for (int b : binaries) {
      const double v = rep.primal[static_cast<std::size_t>(b)];
      const double frac = std::min(v, 1.0 - v);
      if (frac > settings.integrality_tol && frac > frac_best + 1e-12) {
        frac_best = frac;
        branch = b;
      }
    }
    for (double value : {0.0, 1.0}) {
      Node child{bound, order++, node.fixings};
      child.fixings.emplace_back(branch, value);
      open.push(std::move(child));
    }
  }

  if (unbounded) {
    SolveReport rep;
    rep.settings = settings;
    rep.status = Status::unbounded;
    rep.message = "relaxation unbounded";
    rep.nodes = nodes;
    rep.iterations = iterations;
    return rep;
  }
  best.nodes = nodes;
  best.iterations = iterations;
  best.settings = settings;
  if (!have_incumbent) {
    best.status = hit_limit ? Status::node_limit : Status::infeasible;
    best.message = hit_limit ? "node limit reached without incumbent" : "no integer-feasible point";
    return best;
  }
  if (hit_limit) {
    best.status = Status::node_limit;
    best.message = "node limit reached; incumbent not proven optimal";
  } else {
    best.status = Status::optimal;
  }
  return best;
}

SolveReport fix_and_price(const MixedIntegerProgram& mip, const SolveReport& report,
                          const SolverSettings& settings) {
  std::vector<std::pair<int, double>> fix;
  for (int b : mip.binary_variables()) {
    fix.emplace_back(b, std::round(report.primal.at(static_cast<std::size_t>(b))));
  }
  SolveReport rep = solve_lp(with_fixings(mip, fix), settings);
  if (!rep.optimal()) {
    rep.message = "restricted LP is " + std::string(to_string(rep.status)) +
                  " after fixing binaries; tolerance inconsistency between MILP and LP solve";
  }
  return rep;
}

}  // namespace elmarket::lp
