#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "elmarket/demand_block.hpp"
#include "elmarket/investment.hpp"
#include "elmarket/market_program.hpp"
#include "investment_internal.hpp"

namespace elmarket {

using lp::Relation;
using lp::Term;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool improves(double candidate, double incumbent) {
  if (!std::isfinite(incumbent)) return candidate > incumbent;
  return candidate > incumbent + 1e-7 * (1.0 + std::abs(incumbent));
}

// Taxed horizon profit of one producer as a function of a single generator's
// increment, re-clearing only the intervals where that generator is at capacity.
class UnitProfit {
 public:
  UnitProfit(const ScenarioCase& c, CapacityIncrement base, int g, SolveStats& stats)
      : c_(c), inc_(std::move(base)), g_(g), stats_(stats) {
    producer_ = c.producer_index(c.generators[g].producer);
    for (const auto& gen : c.generators) {
      if (c.producer_index(gen.producer) != producer_) continue;
      const int b = c.topology.bus_index(gen.bus);
      if (std::find(price_buses_.begin(), price_buses_.end(), b) == price_buses_.end()) price_buses_.push_back(b);
    }
    inc_[g] = 0.0;
    ClearOptions base_opt;
    base_opt.price_buses = price_buses_;
    const auto d = clear(base_opt);
    fixed_part_ = 0.0;
    const double k = c.generators[g].capacity;
    seed_lines_.resize(static_cast<std::size_t>(c.horizon()));
    for (int t = 0; t < c.horizon(); ++t) {
      const auto& flows = d.intervals[t].flows;
      for (std::size_t l = 0; l < flows.size(); ++l) {
        if (std::abs(flows[l]) >= 0.9 * c.topology.lines[l].rating) seed_lines_[t].push_back(static_cast<int>(l));
      }
      const double q = d.intervals[t].generation[g];
      const double cap = c.generators[g].availability_at(t) * k;
      if (cap > 0.0 && q >= cap - 1e-7 * (1.0 + cap)) {
        binding_.push_back(t);
      } else {
        fixed_part_ += interval_taxed_profit(c, t, d.intervals[t], producer_);
      }
    }
    if (has_ramps()) {
      binding_.clear();
      for (int t = 0; t < c.horizon(); ++t) binding_.push_back(t);
      fixed_part_ = 0.0;
    }
    other_cost_ = 0.0;
    for (std::size_t j = 0; j < c.generators.size(); ++j) {
      if (static_cast<int>(j) != g && c.producer_index(c.generators[j].producer) == producer_) {
        other_cost_ += c.generators[j].investment_cost * inc_[j];
      }
    }
  }

  // Net of all the producer's investment cost.
  double operator()(double x) {
    ++evaluations;
    double p = fixed_part_ - other_cost_ - c_.generators[g_].investment_cost * x;
    if (binding_.empty()) return p;
    inc_[g_] = x;
    ClearOptions opt;
    opt.only_intervals = binding_;
    opt.seed_lines = seed_lines_;
    opt.price_buses = price_buses_;
    const auto d = clear(opt);
    for (int t : binding_) p += interval_taxed_profit(c_, t, d.intervals[t], producer_);
    return p;
  }

  bool flat() const { return binding_.empty(); }
  long evaluations = 0;

 private:
  bool has_ramps() const {
    for (const auto& gen : c_.generators) {
      if (gen.ramp_limit && *gen.ramp_limit < 1.0) return true;
    }
    return false;
  }
  DispatchResult clear(const ClearOptions& opt) {
    auto d = clear_market(c_, MarketMode::optimal, inc_, opt);
    if (!d.ok()) throw std::runtime_error("market clearing failed: " + d.message);
    stats_.merge(d.stats);
    return d;
  }

  const ScenarioCase& c_;
  CapacityIncrement inc_;
  int g_;
  int producer_ = -1;
  SolveStats& stats_;
  std::vector<int> binding_;
  std::vector<std::vector<int>> seed_lines_;
  std::vector<int> price_buses_;  // buses of the producer's generators
  double fixed_part_ = 0.0;
  double other_cost_ = 0.0;
};

// Grid search with refinement on [0, cap]; ties go to the smaller point.
template <class F>
std::pair<double, double> grid_maximize(F&& f, double cap, int points, int refine_levels) {
  points = std::max(points, 2);
  double best_x = 0.0, best_v = f(0.0);
  double lo = 0.0, hi = cap;
  for (int level = 0; level <= refine_levels; ++level) {
    const double h = (hi - lo) / points;
    if (!(h > 0.0)) break;
    for (int k = 0; k <= points; ++k) {
      const double x = std::clamp(lo + k * h, 0.0, cap);
      if (x == best_x) continue;
      const double v = f(x);
      if (improves(v, best_v) || (!improves(best_v, v) && x < best_x)) {
        best_x = x;
        best_v = v;
      }
    }
    lo = std::max(0.0, best_x - h);
    hi = std::min(cap, best_x + h);
  }
  return {best_x, best_v};
}

}  // namespace

InvestmentResult strategic_investment(const ScenarioCase& c, const InvestmentOptions& options) {
  InvestmentResult r;
  r.method = "best-response";
  const auto inv = investing_generators(c);
  r.increment = zero_increment(c);
  r.tau.assign(c.generators.size(), 0.0);
  bool moved = true;
  int sweep = 0;
  try {
    for (; sweep < options.max_sweeps && moved; ++sweep) {
      moved = false;
      for (int g : inv) {
        UnitProfit profit(c, r.increment, g, r.stats);
        const double current = profit(r.increment[g]);
        if (profit.flat()) {
          // Capacity never binds, so more of it only costs money.
          if (r.increment[g] > 0.0 && c.generators[g].investment_cost > 0.0) {
            r.increment[g] = 0.0;
            moved = true;
          }
          continue;
        }
        const auto [x, v] =
            grid_maximize(profit, c.generators[g].investment_cap, options.search_points, options.refine_levels);
        if (improves(v, current) && std::abs(x - r.increment[g]) > 1e-9) {
          r.increment[g] = x;
          moved = true;
        }
      }
    }
    // One-sided derivative of the taxed profit (net of cost) at the solution.
    for (int g : inv) {
      UnitProfit profit(c, r.increment, g, r.stats);
      const double x = r.increment[g];
      const double cap = c.generators[g].investment_cap;
      double h = std::min(options.derivative_step, cap);
      if (!(h > 0.0)) continue;
      const double dir = x + h <= cap + 1e-12 ? 1.0 : -1.0;
      const double p0 = profit(x);
      const double d1 = (profit(x + dir * h) - p0) / (dir * h);
      const double d2 = (profit(x + dir * h / 2) - p0) / (dir * h / 2);
      r.tau[g] = 2.0 * d2 - d1;
    }
  } catch (const std::runtime_error& e) {
    r.status = lp::Status::infeasible;
    r.message = e.what();
    return r;
  }
  r.iterations = sweep;
  if (moved) r.warnings.push_back("best-response sweeps did not settle within the sweep limit");
  detail::finalize_investment(c, r);
  return r;
}

BestResponse subsidy_best_response(const ScenarioCase& c, const std::string& producer,
                                   const BestResponseOptions& options) {
  BestResponse out;
  out.increment = zero_increment(c);
  const int pi = c.producer_index(producer);
  if (pi < 0) throw std::invalid_argument("unknown producer '" + producer + "'");
  if (!options.rivals.empty()) {
    if (options.rivals.size() != c.generators.size()) throw std::invalid_argument("rival increments need one entry per generator");
    for (std::size_t g = 0; g < c.generators.size(); ++g) {
      if (c.producer_index(c.generators[g].producer) != pi) out.increment[g] = options.rivals[g];
    }
  }
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    if (c.producer_index(c.generators[g].producer) == pi) out.generators.push_back(static_cast<int>(g));
  }
  std::vector<int> own_inv;
  for (int g : out.generators) {
    if (c.generators[g].investment_cap > 0.0) own_inv.push_back(g);
  }
  const auto pu = static_cast<std::size_t>(pi);

  auto clear = [&](const CapacityIncrement& inc, const ClearOptions& opt) {
    auto d = clear_market(c, MarketMode::optimal, inc, opt);
    if (!d.ok()) throw std::runtime_error("market clearing failed: " + d.message);
    return d;
  };
  auto profit_at = [&](const CapacityIncrement& inc, const ClearOptions& opt) {
    const auto d = clear(inc, opt);
    double p = 0.0;
    if (options.with_subsidy) {
      const auto rep = compute_incentives(c, d);
      for (int t = 0; t < c.horizon(); ++t) p += rep.intervals[t][pu].profit_full_direct;
    } else {
      for (int t = 0; t < c.horizon(); ++t) p += interval_taxed_profit(c, t, d.intervals[t], pi);
    }
    for (int g : out.generators) p -= c.generators[g].investment_cost * inc[g];
    return p;
  };

  if (own_inv.empty()) {
    out.converged = true;
    out.profit = profit_at(out.increment, {});
    return out;
  }

  for (; out.iterations < options.max_iterations; ++out.iterations) {
    const auto base = clear(out.increment, {});
    ClearOptions fixed;
    fixed.fixed_output.assign(static_cast<std::size_t>(c.horizon()),
                              std::vector<double>(c.generators.size(), kNaN));
    for (int t = 0; t < c.horizon(); ++t) {
      for (std::size_t g = 0; g < c.generators.size(); ++g) {
        if (c.producer_index(c.generators[g].producer) != pi) fixed.fixed_output[t][g] = base.intervals[t].generation[g];
      }
    }
    CapacityIncrement next = out.increment;
    for (int g : own_inv) {
      const double cap = c.generators[g].investment_cap;
      const auto n = static_cast<long>(std::floor(cap / options.grid_step + 1e-9));
      auto candidate = next;
      double best_x = 0.0, best_v = -lp::kInfinity;
      for (long k = 0; k <= n + 1; ++k) {
        const double x = k <= n ? k * options.grid_step : cap;
        if (k > n && cap - n * options.grid_step <= 1e-9) break;
        candidate[g] = x;
        const double v = profit_at(candidate, fixed);
        if (improves(v, best_v)) {
          best_x = x;
          best_v = v;
        }
      }
      next[g] = best_x;
    }
    bool same = true;
    for (int g : own_inv) same = same && std::abs(next[g] - out.increment[g]) <= 1e-9;
    out.increment = next;
    if (same) {
      out.converged = true;
      break;
    }
  }
  out.profit = profit_at(out.increment, {});
  return out;
}

InvestmentResult strategic_investment_milp(const ScenarioCase& c, const InvestmentOptions&) {
  InvestmentResult r;
  r.method = "milp-reference";
  const ScenarioCase lin = detail::pwl_case(c);
  const double gamma = lin.settings.gamma;
  MarketProgramSpec spec;
  spec.mode = MarketMode::competitive;
  for (int t = 0; t < lin.horizon(); ++t) spec.intervals.push_back(t);
  spec.increment = zero_increment(lin);
  spec.investment_variables = true;
  spec.ramps = false;
  spec.all_lines = true;
  MarketProgram mp = build_market_program(lin, spec);
  std::vector<DemandBlock> blocks;
  for (std::size_t i = 0; i < mp.intervals.size(); ++i) {
    blocks.push_back(append_demand_equilibrium_block(mp, lin, i, gamma));
  }
  auto& prog = mp.lp;
  std::vector<int> mu_dn(lin.generators.size(), -1), mu_up(lin.generators.size(), -1);
  std::vector<std::vector<int>> mu_t(lin.generators.size());
  for (std::size_t g = 0; g < lin.generators.size(); ++g) {
    const int dk = mp.invest_var[g];
    if (dk < 0) continue;
    const auto& gen = lin.generators[g];
    const std::string id = gen.id;
    const double cc = gen.investment_cost;
    const double mu_cap = gamma * cc;
    const double m = gamma * (gen.capacity + gen.investment_cap);
    const int mdn = prog.add_variable("muDGmin_" + id, -mu_cap, 0.0);
    const int mup = prog.add_variable("muDGmax_" + id, 0.0, mu_cap);
    mu_dn[g] = mdn;
    mu_up[g] = mup;
    const int zdn = prog.add_binary("zDGmin_" + id);
    const int zup = prog.add_binary("zDGmax_" + id);
    std::vector<Term> dual{{mdn, 1.0}, {mup, 1.0}};
    // dk <= M (1 - zdn);  mu_dn >= -gamma c zdn
    prog.add_constraint("csDGmin_" + id, {{dk, 1.0}, {zdn, m}}, Relation::less_equal, m);
    prog.add_constraint("csmuDGmin_" + id, {{mdn, 1.0}, {zdn, mu_cap}}, Relation::greater_equal, 0.0);
    // cap - dk <= M (1 - zup);  mu_up <= gamma c zup
    prog.add_constraint("csDGmax_" + id, {{dk, -1.0}, {zup, m}}, Relation::less_equal, m - gen.investment_cap);
    prog.add_constraint("csmuDGmax_" + id, {{mup, 1.0}, {zup, -mu_cap}}, Relation::less_equal, 0.0);
    for (std::size_t i = 0; i < mp.intervals.size(); ++i) {
      const int t = mp.intervals[i].t;
      const double a = gen.availability_at(t);
      const std::string tag = id + "_" + std::to_string(t + 1);
      const int mu = prog.add_variable("muGmax_" + tag, 0.0, mu_cap);
      const int z = prog.add_binary("zGmax_" + tag);
      dual.push_back({mu, -1.0});
      mu_t[g].push_back(mu);
      // q - A (K + dk) >= -M (1 - z)
      std::vector<Term> row;
      for (int s : mp.intervals[i].gen_seg[g]) row.push_back({s, 1.0});
      row.push_back({dk, -a});
      row.push_back({z, -m});
      prog.add_constraint("csGmax_" + tag, std::move(row), Relation::greater_equal, a * gen.capacity - m);
      prog.add_constraint("csmuGmax_" + tag, {{mu, 1.0}, {z, -mu_cap}}, Relation::less_equal, 0.0);
    }
    prog.add_constraint("dualDG_" + id, std::move(dual), Relation::equal, -cc);
  }
  lp::MilpOptions mo;
  mo.heuristic = demand_block_heuristic(lin, mp, blocks);
  const auto rep = lp::solve_milp(prog, solver_settings_for(lin), mo);
  r.iterations = rep.nodes;
  r.stats.merge(rep);
  if (!rep.optimal()) {
    r.status = rep.status;
    r.message = std::string("strategic MILP ") + lp::to_string(rep.status);
    return r;
  }
  auto val = [&](int v) { return rep.primal[static_cast<std::size_t>(v)]; };
  for (const auto& b : blocks) r.kkt_residual = std::max(r.kkt_residual, detail::demand_block_residual(mp, b, rep.primal));
  r.increment = zero_increment(c);
  r.tau.assign(c.generators.size(), 0.0);
  for (std::size_t g = 0; g < lin.generators.size(); ++g) {
    if (mp.invest_var[g] < 0) continue;
    const auto& gen = lin.generators[g];
    const double x = val(mp.invest_var[g]);
    double worst = std::max(std::abs(x * val(mu_dn[g])), std::abs((gen.investment_cap - x) * val(mu_up[g])));
    double row = val(mu_dn[g]) + val(mu_up[g]) + gen.investment_cost;
    for (std::size_t i = 0; i < mp.intervals.size(); ++i) {
      const double slack = gen.availability_at(mp.intervals[i].t) * (gen.capacity + x) -
                           mp.generation(rep.primal, i, static_cast<int>(g));
      worst = std::max(worst, std::abs(slack * val(mu_t[g][i])));
      row -= val(mu_t[g][i]);
    }
    r.kkt_residual = std::max({r.kkt_residual, worst, std::abs(row)});
    r.increment[g] = std::abs(x) < 1e-9 ? 0.0 : x;
    r.tau[g] = rep.primal[static_cast<std::size_t>(mu_dn[g])];
  }
  detail::finalize_investment(c, r);
  return r;
}

}  // namespace elmarket
