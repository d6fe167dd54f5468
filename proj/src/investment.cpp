#include "elmarket/investment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "elmarket/demand_block.hpp"
#include "elmarket/market_program.hpp"
#include "investment_internal.hpp"

namespace elmarket {

using lp::Relation;
using lp::Term;

double InvestmentResult::total_mw() const {
  double s = 0.0;
  for (double x : increment) s += x;
  return s;
}

std::vector<int> investing_generators(const ScenarioCase& c) {
  std::vector<int> out;
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    if (c.generators[g].investment_cap > 0.0) out.push_back(static_cast<int>(g));
  }
  return out;
}

InvestmentResult evaluate_investment(const ScenarioCase& c, const CapacityIncrement& increment) {
  if (increment.size() != c.generators.size()) throw std::invalid_argument("increment needs one entry per generator");
  InvestmentResult r;
  r.method = "fixed";
  r.increment = increment;
  r.tau.assign(c.generators.size(), 0.0);
  detail::finalize_investment(c, r);
  return r;
}

double net_welfare(const ScenarioCase& c, const CapacityIncrement& increment) {
  const auto d = clear_market(c, MarketMode::optimal, increment);
  if (!d.ok()) throw std::runtime_error("market clearing failed: " + d.message);
  double w = d.total_social_welfare();
  for (std::size_t g = 0; g < c.generators.size(); ++g) w -= c.generators[g].investment_cost * increment[g];
  return w;
}

namespace detail {

ScenarioCase pwl_case(const ScenarioCase& c) {
  return has_quadratic_utility(c) ? linearize_utilities(c) : c;
}

void finalize_investment(const ScenarioCase& c, InvestmentResult& r) {
  ClearOptions opt;
  r.dispatch = clear_market(c, MarketMode::optimal, r.increment, opt);
  if (!r.dispatch.ok()) {
    r.status = r.dispatch.status;
    r.message = "clearing at the chosen increment failed: " + r.dispatch.message;
    return;
  }
  r.stats.merge(r.dispatch.stats);
  r.welfare = r.dispatch.total_social_welfare();
  r.investment_cost = 0.0;
  r.producer_profit.assign(c.producers.size(), 0.0);
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const double cost = c.generators[g].investment_cost * r.increment[g];
    r.investment_cost += cost;
    r.producer_profit[static_cast<std::size_t>(c.producer_index(c.generators[g].producer))] -= cost;
  }
  r.net_welfare = r.welfare - r.investment_cost;
  for (int t = 0; t < c.horizon(); ++t) {
    for (std::size_t i = 0; i < c.producers.size(); ++i) {
      r.producer_profit[i] += interval_taxed_profit(c, t, r.dispatch.intervals[t], static_cast<int>(i));
    }
  }
}

}  // namespace detail

namespace {

std::size_t binary_count(const ScenarioCase& c) {
  std::size_t n = 0;
  for (const auto& d : c.demands) {
    for (const auto& u : d.utility) {
      if (const auto* p = std::get_if<PiecewiseLinearCurve>(&u)) n += 2 * p->segment_count();
    }
  }
  return n + 2 * c.topology.lines.size() * static_cast<std::size_t>(c.horizon());
}

}  // namespace

namespace detail {

double demand_block_residual(const MarketProgram& mp, const DemandBlock& b, const std::vector<double>& x) {
  auto val = [&](int v) { return x[static_cast<std::size_t>(v)]; };
  const auto& iv = mp.intervals[b.interval];
  double worst = 0.0;
  for (std::size_t d = 0; d < iv.dem_seg.size(); ++d) {
    for (std::size_t k = 0; k < iv.dem_seg[d].size(); ++k) {
      const int col = iv.dem_seg[d][k];
      const double dk = val(col), up = mp.lp.variable(col).upper;
      worst = std::max(worst, std::abs(dk * val(b.mu_dmin[d][k])));
      worst = std::max(worst, std::abs((up - dk) * val(b.mu_dmax[d][k])));
      double lhs = val(b.mu_dmin[d][k]) + val(b.mu_dmax[d][k]) + val(b.lambda);
      for (std::size_t l = 0; l < b.mu_lmin.size(); ++l) {
        const double h = mp.ptdf(l, static_cast<std::size_t>(mp.dem_bus[d]));
        lhs -= h * (val(b.mu_lmin[l]) + val(b.mu_lmax[l]));
      }
      worst = std::max(worst, std::abs(lhs - mp.lp.variable(col).objective));
    }
  }
  const auto flows = mp.flows(x, b.interval);
  for (std::size_t l = 0; l < b.mu_lmin.size(); ++l) {
    const double f = mp.line_rating[l];
    worst = std::max(worst, std::abs((flows[l] + f) * val(b.mu_lmin[l])));
    worst = std::max(worst, std::abs((f - flows[l]) * val(b.mu_lmax[l])));
  }
  return worst;
}

}  // namespace detail

namespace {

InvestmentResult optimal_by_milp(const ScenarioCase& c, const ScenarioCase& lin) {
  InvestmentResult r;
  r.method = "milp";
  MarketProgramSpec spec;
  spec.mode = MarketMode::optimal;
  for (int t = 0; t < lin.horizon(); ++t) spec.intervals.push_back(t);
  spec.increment = zero_increment(lin);
  spec.investment_variables = true;
  spec.ramps = false;
  spec.all_lines = true;
  MarketProgram mp = build_market_program(lin, spec);
  for (std::size_t g = 0; g < lin.generators.size(); ++g) {
    if (mp.invest_var[g] >= 0) mp.lp.set_objective(mp.invest_var[g], -lin.generators[g].investment_cost);
  }
  std::vector<DemandBlock> blocks;
  for (std::size_t i = 0; i < mp.intervals.size(); ++i) {
    blocks.push_back(append_demand_equilibrium_block(mp, lin, i, lin.settings.gamma));
  }
  lp::MilpOptions mo;
  mo.heuristic = demand_block_heuristic(lin, mp, blocks);
  const auto rep = lp::solve_milp(mp.lp, solver_settings_for(lin), mo);
  r.iterations = rep.nodes;
  r.stats.merge(rep);
  if (!rep.optimal()) {
    r.status = rep.status;
    r.message = std::string("investment MILP ") + lp::to_string(rep.status) +
                (rep.message.empty() ? "" : ": " + rep.message);
    return r;
  }
  r.increment = zero_increment(c);
  for (std::size_t g = 0; g < lin.generators.size(); ++g) {
    if (mp.invest_var[g] >= 0) r.increment[g] = rep.primal[static_cast<std::size_t>(mp.invest_var[g])];
  }
  for (const auto& b : blocks) r.kkt_residual = std::max(r.kkt_residual, detail::demand_block_residual(mp, b, rep.primal));
  // Marginal value of capacity from the fixed-binary LP duals.
  const auto priced = lp::fix_and_price(mp.lp, rep, solver_settings_for(lin));
  r.tau.assign(c.generators.size(), 0.0);
  if (priced.optimal()) {
    for (std::size_t g = 0; g < lin.generators.size(); ++g) {
      if (mp.invest_var[g] < 0) continue;
      double v = 0.0;
      for (std::size_t i = 0; i < mp.intervals.size(); ++i) {
        const int row = mp.intervals[i].capacity_row[g];
        if (row >= 0) v += lin.generators[g].availability_at(mp.intervals[i].t) * priced.duals[row];
      }
      r.tau[g] = v - lin.generators[g].investment_cost;
    }
  }
  return r;
}

struct CutPoint {
  std::vector<double> value;               // per t
  std::vector<std::vector<double>> slope;  // [t][investing index]
  double net = 0.0;
  bool ok = true;
  std::string message;
};

CutPoint evaluate_subproblems(const ScenarioCase& lin, const std::vector<int>& inv,
                              const CapacityIncrement& dk, SolveStats& stats) {
  CutPoint p;
  const auto settings = solver_settings_for(lin);
  p.value.assign(static_cast<std::size_t>(lin.horizon()), 0.0);
  p.slope.assign(static_cast<std::size_t>(lin.horizon()), std::vector<double>(inv.size(), 0.0));
  for (int t = 0; t < lin.horizon(); ++t) {
    MarketProgramSpec spec;
    spec.mode = MarketMode::optimal;
    spec.intervals = {t};
    spec.increment = dk;
    spec.capacity_rows = true;
    spec.ramps = false;
    MarketProgram mp = build_market_program(lin, spec);
    const auto rep = solve_market_program(lin, mp, settings, stats);
    if (!rep.optimal()) {
      p.ok = false;
      p.message = std::string("subproblem ") + lp::to_string(rep.status) + " at interval " + std::to_string(t + 1);
      return p;
    }
    p.value[t] = rep.objective;
    for (std::size_t j = 0; j < inv.size(); ++j) {
      const int row = mp.intervals[0].capacity_row[inv[j]];
      if (row < 0) continue;
      p.slope[t][j] = lin.generators[inv[j]].availability_at(t) * rep.duals[static_cast<std::size_t>(row)];
    }
  }
  p.net = 0.0;
  for (double v : p.value) p.net += v;
  for (std::size_t g = 0; g < lin.generators.size(); ++g) p.net -= lin.generators[g].investment_cost * dk[g];
  return p;
}

InvestmentResult optimal_by_benders(const ScenarioCase& c, const ScenarioCase& lin,
                                    const InvestmentOptions& opt) {
  InvestmentResult r;
  r.method = "benders";
  const auto inv = investing_generators(lin);
  const int T = lin.horizon();
  struct Cut {
    int t;
    double rhs;
    std::vector<double> slope;
  };
  std::vector<Cut> cuts;
  auto add_cuts = [&](const CutPoint& p, const CapacityIncrement& dk) {
    for (int t = 0; t < T; ++t) {
      double rhs = p.value[t];
      for (std::size_t j = 0; j < inv.size(); ++j) rhs -= p.slope[t][j] * dk[inv[j]];
      cuts.push_back({t, rhs, p.slope[t]});
    }
  };

  CapacityIncrement best = zero_increment(lin);
  CapacityIncrement full = zero_increment(lin);
  for (int g : inv) full[g] = lin.generators[g].investment_cap;
  double lower = -lp::kInfinity;
  std::vector<double> best_slope_sum(inv.size(), 0.0);
  for (const auto* start : {&best, &full}) {
    const auto p = evaluate_subproblems(lin, inv, *start, r.stats);
    if (!p.ok) {
      r.status = lp::Status::infeasible;
      r.message = p.message;
      return r;
    }
    add_cuts(p, *start);
    if (p.net > lower) {
      lower = p.net;
      best = *start;
      for (std::size_t j = 0; j < inv.size(); ++j) {
        best_slope_sum[j] = 0.0;
        for (int t = 0; t < T; ++t) best_slope_sum[j] += p.slope[t][j];
      }
    }
  }

  double upper = lp::kInfinity;
  int it = 0;
  const auto settings = solver_settings_for(lin);
  for (; it < opt.benders_max_iterations; ++it) {
    lp::LinearProgram master(lp::Sense::maximize);
    std::vector<int> xk;
    for (int g : inv) {
      xk.push_back(master.add_variable("dk_" + lin.generators[g].id, 0.0, lin.generators[g].investment_cap,
                                       -lin.generators[g].investment_cost));
    }
    std::vector<int> theta;
    for (int t = 0; t < T; ++t) theta.push_back(master.add_variable("theta" + std::to_string(t + 1), -lp::kInfinity, lp::kInfinity, 1.0));
    for (const auto& cut : cuts) {
      std::vector<Term> row{{theta[cut.t], 1.0}};
      for (std::size_t j = 0; j < inv.size(); ++j) {
        if (cut.slope[j] != 0.0) row.push_back({xk[j], -cut.slope[j]});
      }
      master.add_constraint("cut", std::move(row), Relation::less_equal, cut.rhs);
    }
    const auto mrep = lp::solve_lp(master, settings);
    r.stats.merge(mrep);
    if (!mrep.optimal()) {
      r.status = mrep.status;
      r.message = std::string("Benders master ") + lp::to_string(mrep.status);
      return r;
    }
    upper = mrep.objective;
    if (upper - lower <= 1e-7 * (1.0 + std::abs(lower))) break;
    CapacityIncrement dk = zero_increment(lin);
    for (std::size_t j = 0; j < inv.size(); ++j) dk[inv[j]] = mrep.primal[xk[j]];
    const auto p = evaluate_subproblems(lin, inv, dk, r.stats);
    if (!p.ok) {
      r.status = lp::Status::infeasible;
      r.message = p.message;
      return r;
    }
    add_cuts(p, dk);
    if (p.net > lower + 1e-12 * (1.0 + std::abs(lower))) {
      lower = p.net;
      best = dk;
      for (std::size_t j = 0; j < inv.size(); ++j) {
        best_slope_sum[j] = 0.0;
        for (int t = 0; t < T; ++t) best_slope_sum[j] += p.slope[t][j];
      }
    }
  }
  r.iterations = it;
  if (upper - lower > 1e-6 * (1.0 + std::abs(lower))) {
    r.warnings.push_back("Benders stopped with gap " + std::to_string(upper - lower));
  }
  r.increment = zero_increment(c);
  for (int g : inv) r.increment[g] = best[g];
  r.tau.assign(c.generators.size(), 0.0);
  for (std::size_t j = 0; j < inv.size(); ++j) {
    r.tau[inv[j]] = best_slope_sum[j] - lin.generators[inv[j]].investment_cost;
  }
  return r;
}

}  // namespace

InvestmentResult optimal_investment(const ScenarioCase& c, const InvestmentOptions& options) {
  const ScenarioCase lin = detail::pwl_case(c);
  InvestmentMethod m = options.method;
  if (m == InvestmentMethod::automatic) {
    m = binary_count(lin) <= static_cast<std::size_t>(options.milp_binary_limit) ? InvestmentMethod::milp
                                                                                  : InvestmentMethod::benders;
  }
  InvestmentResult r = m == InvestmentMethod::milp ? optimal_by_milp(c, lin) : optimal_by_benders(c, lin, options);
  if (!r.ok()) return r;
  for (double& x : r.increment) {
    if (std::abs(x) < 1e-9) x = 0.0;
  }
  detail::finalize_investment(c, r);
  return r;
}

GridOracleResult investment_grid_oracle(const ScenarioCase& c, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const auto inv = investing_generators(c);
  if (inv.size() > 3) throw std::invalid_argument("grid oracle supports at most 3 investing generators");
  std::vector<std::vector<double>> axes;
  for (int g : inv) {
    std::vector<double> a;
    const double cap = c.generators[g].investment_cap;
    const auto n = static_cast<long>(std::floor(cap / step + 1e-9));
    for (long k = 0; k <= n; ++k) a.push_back(k * step);
    if (cap - a.back() > 1e-9) a.push_back(cap);
    axes.push_back(a);
  }
  GridOracleResult out;
  out.best_value = -lp::kInfinity;
  std::vector<std::pair<CapacityIncrement, double>> all;
  std::vector<std::size_t> idx(inv.size(), 0);
  for (;;) {
    CapacityIncrement dk = zero_increment(c);
    for (std::size_t j = 0; j < inv.size(); ++j) dk[inv[j]] = axes[j][idx[j]];
    const double w = net_welfare(c, dk);
    ++out.evaluations;
    all.emplace_back(dk, w);
    // Strictly better only: enumeration is lexicographic, so ties keep the smaller vector.
    if (out.best.empty() || w > out.best_value + 1e-9 * (1.0 + std::abs(out.best_value))) {
      out.best_value = w;
      out.best = dk;
    }
    std::size_t j = inv.size();
    while (j > 0) {
      --j;
      if (++idx[j] < axes[j].size()) break;
      idx[j] = 0;
      if (j == 0) {
        j = inv.size() + 1;
        break;
      }
    }
    if (inv.empty() || j == inv.size() + 1) break;
  }
  for (const auto& [dk, w] : all) {
    if (w >= out.best_value - 1e-9 * (1.0 + std::abs(out.best_value))) out.argmax.push_back(dk);
  }
  return out;
}

}  // namespace elmarket
