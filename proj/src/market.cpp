#include "elmarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "elmarket/market_program.hpp"
#include "elmarket/ptdf.hpp"
#include "market_internal.hpp"

namespace elmarket {

using lp::Relation;
using lp::Term;

const char* to_string(MarketMode m) {
  return m == MarketMode::competitive ? "competitive" : "optimal";
}

std::optional<MarketMode> market_mode_from_string(std::string_view s) {
  if (s == "competitive") return MarketMode::competitive;
  if (s == "optimal") return MarketMode::optimal;
  return std::nullopt;
}

void SolveStats::merge(const lp::SolveReport& r) {
  ++lp_solves;
  simplex_iterations += r.iterations;
  if (r.optimal()) {
    worst_duality_gap = std::max(worst_duality_gap, r.duality_gap / (1.0 + std::abs(r.objective)));
    worst_primal_residual = std::max(worst_primal_residual, r.primal_residual);
  }
}

void SolveStats::merge(const SolveStats& s) {
  lp_solves += s.lp_solves;
  simplex_iterations += s.simplex_iterations;
  worst_duality_gap = std::max(worst_duality_gap, s.worst_duality_gap);
  worst_primal_residual = std::max(worst_primal_residual, s.worst_primal_residual);
}

double DispatchResult::total_social_welfare() const {
  double w = 0.0;
  for (const auto& iv : intervals) w += iv.welfare.social_welfare;
  return w;
}

double DispatchResult::total_generation(int t) const {
  double s = 0.0;
  for (double q : intervals[static_cast<std::size_t>(t)].generation) s += q;
  return s;
}

std::optional<std::vector<double>> linear_externality_cost(const ScenarioCase& c, int g) {
  const auto& gen = c.generators[static_cast<std::size_t>(g)];
  const auto* dmg = c.externalities.damage_at(gen.bus);
  std::vector<double> e(gen.cost.segment_count(), 0.0);
  if (dmg == nullptr || dmg->empty()) return e;
  if (dmg->segment_count() != 1) return std::nullopt;
  const double slope = dmg->slopes()[0];
  for (std::size_t s = 0; s < e.size(); ++s) e[s] = slope * gen.pollution_rate[s];
  return e;
}

lp::SolverSettings solver_settings_for(const ScenarioCase& c) {
  lp::SolverSettings s;
  s.feasibility_tol = c.settings.feasibility_tol;
  s.integrality_tol = c.settings.integrality_tol;
  s.gap_tol = c.settings.gap_tol;
  return s;
}

// ---------------------------------------------------------------------------
// Program assembly

namespace {

double extrapolated_value(const PiecewiseLinearCurve& curve, double x) {
  if (curve.empty() || x <= 0.0) return 0.0;
  const double hi = curve.domain_max();
  if (x <= hi) return curve.value(x);
  return curve.value(hi) + curve.slopes().back() * (x - hi);
}

bool needs_ramps(const ScenarioCase& c) {
  for (const auto& g : c.generators) {
    if (g.ramp_limit && *g.ramp_limit < 1.0) return true;
  }
  return false;
}

}  // namespace

MarketProgram build_market_program(const ScenarioCase& c, const MarketProgramSpec& spec) {
  MarketProgram mp;
  const auto& topo = c.topology;
  const int nb = static_cast<int>(topo.buses.size());
  const int nl = static_cast<int>(topo.lines.size());
  const int ng = static_cast<int>(c.generators.size());
  const int nd = static_cast<int>(c.demands.size());
  mp.ptdf = nl > 0 ? resolve_ptdf(topo) : DenseMatrix(0, static_cast<std::size_t>(nb));
  for (const auto& g : c.generators) mp.gen_bus.push_back(topo.bus_index(g.bus));
  for (const auto& d : c.demands) mp.dem_bus.push_back(topo.bus_index(d.bus));
  for (const auto& l : topo.lines) mp.line_rating.push_back(l.rating);

  const bool optimal = spec.mode == MarketMode::optimal;
  std::vector<std::optional<std::vector<double>>> ext(static_cast<std::size_t>(ng));
  for (int g = 0; g < ng; ++g) ext[g] = optimal ? linear_externality_cost(c, g) : std::vector<double>(c.generators[g].cost.segment_count(), 0.0);
  std::vector<const PiecewiseLinearCurve*> pwl_damage(static_cast<std::size_t>(nb), nullptr);
  if (optimal) {
    for (int n = 0; n < nb; ++n) {
      const auto* dmg = c.externalities.damage_at(topo.buses[n]);
      if (dmg != nullptr && dmg->segment_count() > 1) pwl_damage[n] = dmg;
    }
  }

  mp.invest_var.assign(static_cast<std::size_t>(ng), -1);
  if (spec.investment_variables) {
    for (int g = 0; g < ng; ++g) {
      const auto& gen = c.generators[g];
      if (gen.investment_cap <= 0.0) continue;
      mp.invest_var[g] = mp.lp.add_variable("dk_" + gen.id, 0.0, gen.investment_cap, 0.0);
    }
  }
  auto increment_of = [&](int g) {
    return spec.increment.empty() ? 0.0 : spec.increment[static_cast<std::size_t>(g)];
  };

  for (int t : spec.intervals) {
    MarketProgram::Interval iv;
    iv.t = t;
    const std::string ts = "_t" + std::to_string(t + 1);
    iv.gen_seg.resize(static_cast<std::size_t>(ng));
    iv.capacity_row.assign(static_cast<std::size_t>(ng), -1);
    std::vector<Term> balance;
    std::vector<std::vector<Term>> emissions(static_cast<std::size_t>(nb));

    for (int g = 0; g < ng; ++g) {
      const auto& gen = c.generators[g];
      const double avail = gen.availability_at(t);
      const bool invest = mp.invest_var[g] >= 0;
      const bool fixed = detail::is_fixed(spec.fixed_output, t, g);
      const bool cap_row = spec.capacity_rows && !invest && !fixed && gen.investment_cap > 0.0;
      const double cap = avail * (gen.capacity + (invest ? 0.0 : increment_of(g)));
      double remaining = fixed ? (*spec.fixed_output)[t][g] : 0.0;
      const auto& b = gen.cost.breakpoints();
      for (std::size_t s = 0; s < gen.cost.segment_count(); ++s) {
        double lo = 0.0;
        double up = invest ? gen.cost.segment_width(s)
                           : std::clamp(cap - b[s], 0.0, gen.cost.segment_width(s));
        if (invest || cap_row) {
          up = std::clamp(avail * (gen.capacity + gen.investment_cap) - b[s], 0.0,
                          gen.cost.segment_width(s));
        }
        if (fixed) {
          lo = up = std::clamp(remaining, 0.0, gen.cost.segment_width(s));
          remaining -= lo;
        }
        double obj = -gen.cost.slopes()[s];
        if (ext[g]) obj -= (*ext[g])[s];
        const int v = mp.lp.add_variable("q_" + gen.id + "_s" + std::to_string(s) + ts, lo, up, obj);
        iv.gen_seg[g].push_back(v);
        balance.push_back({v, -1.0});
        if (!ext[g] && gen.pollution_rate[s] != 0.0) {
          emissions[mp.gen_bus[g]].push_back({v, -gen.pollution_rate[s]});
        }
      }
      if (fixed && remaining > 1e-9 * (1.0 + std::abs((*spec.fixed_output)[t][g]))) {
        throw std::invalid_argument("fixed output of " + gen.id + " exceeds its cost-curve domain");
      }
      if (cap_row) {
        std::vector<Term> row;
        for (int v : iv.gen_seg[g]) row.push_back({v, 1.0});
        iv.capacity_row[g] = mp.lp.add_constraint("cap_" + gen.id + ts, std::move(row),
                                                  Relation::less_equal, cap);
      }
      if (invest && !fixed) {
        std::vector<Term> row;
        for (int v : iv.gen_seg[g]) row.push_back({v, 1.0});
        row.push_back({mp.invest_var[g], -avail});
        iv.capacity_row[g] = mp.lp.add_constraint("cap_" + gen.id + ts, std::move(row),
                                                  Relation::less_equal, avail * gen.capacity);
      }
    }

    iv.dem_seg.resize(static_cast<std::size_t>(nd));
    for (int d = 0; d < nd; ++d) {
      const auto& dem = c.demands[d];
      const auto* curve = std::get_if<PiecewiseLinearCurve>(&dem.utility[t]);
      if (curve == nullptr) {
        throw std::invalid_argument("demand " + dem.id + " has a quadratic utility; linearize first");
      }
      const double dmax = dem.max_consumption[t];
      const auto& b = curve->breakpoints();
      for (std::size_t k = 0; k < curve->segment_count(); ++k) {
        const double up = std::clamp(dmax - b[k], 0.0, curve->segment_width(k));
        const int v = mp.lp.add_variable("d_" + dem.id + "_s" + std::to_string(k) + ts, 0.0, up,
                                         curve->slopes()[k]);
        iv.dem_seg[d].push_back(v);
        balance.push_back({v, 1.0});
      }
    }
    iv.balance_row = mp.lp.add_constraint("balance" + ts, std::move(balance), Relation::equal, 0.0);

    iv.damage_seg.resize(static_cast<std::size_t>(nb));
    for (int n = 0; n < nb; ++n) {
      if (pwl_damage[n] == nullptr || emissions[n].empty()) continue;
      const auto& curve = *pwl_damage[n];
      auto row = emissions[n];
      for (std::size_t k = 0; k < curve.segment_count(); ++k) {
        const bool last = k + 1 == curve.segment_count();
        const int v = mp.lp.add_variable("x_" + topo.buses[n] + "_s" + std::to_string(k) + ts, 0.0,
                                         last ? lp::kInfinity : curve.segment_width(k),
                                         -curve.slopes()[k]);
        iv.damage_seg[n].push_back(v);
        row.push_back({v, 1.0});
      }
      mp.lp.add_constraint("emis_" + topo.buses[n] + ts, std::move(row), Relation::equal, 0.0);
    }

    iv.line_max_row.assign(static_cast<std::size_t>(nl), -1);
    iv.line_min_row.assign(static_cast<std::size_t>(nl), -1);
    mp.intervals.push_back(std::move(iv));
    if (spec.all_lines) {
      for (int l = 0; l < nl; ++l) mp.add_line(mp.intervals.size() - 1, l);
    }
  }

  if (spec.ramps && !spec.investment_variables && needs_ramps(c)) {
    for (std::size_t i = 1; i < mp.intervals.size(); ++i) {
      const int t = mp.intervals[i].t;
      const int tp = mp.intervals[i - 1].t;
      if (tp != t - 1) continue;
      for (int g = 0; g < ng; ++g) {
        const auto& gen = c.generators[g];
        if (!gen.ramp_limit || *gen.ramp_limit >= 1.0) continue;
        const double a1 = gen.availability_at(t), a0 = gen.availability_at(tp);
        if (a1 <= 0.0 || a0 <= 0.0) continue;
        std::vector<Term> row;
        for (int v : mp.intervals[i].gen_seg[g]) row.push_back({v, 1.0 / a1});
        for (int v : mp.intervals[i - 1].gen_seg[g]) row.push_back({v, -1.0 / a0});
        const double lim = *gen.ramp_limit * (gen.capacity + increment_of(g));
        const std::string nm = "ramp_" + gen.id + "_t" + std::to_string(t + 1);
        mp.lp.add_constraint(nm + "_up", row, Relation::less_equal, lim);
        mp.lp.add_constraint(nm + "_dn", std::move(row), Relation::greater_equal, -lim);
      }
    }
  }
  return mp;
}

void MarketProgram::add_line(std::size_t i, int l) {
  auto& iv = intervals[i];
  if (iv.line_max_row[l] >= 0) return;
  std::vector<Term> row;
  for (std::size_t g = 0; g < iv.gen_seg.size(); ++g) {
    const double h = ptdf(static_cast<std::size_t>(l), static_cast<std::size_t>(gen_bus[g]));
    if (h == 0.0) continue;
    for (int v : iv.gen_seg[g]) row.push_back({v, h});
  }
  for (std::size_t d = 0; d < iv.dem_seg.size(); ++d) {
    const double h = ptdf(static_cast<std::size_t>(l), static_cast<std::size_t>(dem_bus[d]));
    if (h == 0.0) continue;
    for (int v : iv.dem_seg[d]) row.push_back({v, -h});
  }
  const std::string nm = "line" + std::to_string(l + 1) + "_t" + std::to_string(iv.t + 1);
  const double rating = line_rating[static_cast<std::size_t>(l)];
  iv.line_max_row[l] = lp.add_constraint(nm + "_max", row, Relation::less_equal, rating);
  iv.line_min_row[l] = lp.add_constraint(nm + "_min", std::move(row), Relation::greater_equal, -rating);
}

double MarketProgram::generation(const std::vector<double>& x, std::size_t i, int g) const {
  double s = 0.0;
  for (int v : intervals[i].gen_seg[g]) s += x[static_cast<std::size_t>(v)];
  return s;
}

double MarketProgram::consumption(const std::vector<double>& x, std::size_t i, int d) const {
  double s = 0.0;
  for (int v : intervals[i].dem_seg[d]) s += x[static_cast<std::size_t>(v)];
  return s;
}

std::vector<double> MarketProgram::flows(const std::vector<double>& x, std::size_t i) const {
  std::vector<double> inj(ptdf.cols, 0.0);
  for (std::size_t g = 0; g < gen_bus.size(); ++g) inj[gen_bus[g]] += generation(x, i, static_cast<int>(g));
  for (std::size_t d = 0; d < dem_bus.size(); ++d) inj[dem_bus[d]] -= consumption(x, i, static_cast<int>(d));
  std::vector<double> f(ptdf.rows, 0.0);
  for (std::size_t l = 0; l < ptdf.rows; ++l) {
    for (std::size_t n = 0; n < ptdf.cols; ++n) f[l] += ptdf(l, n) * inj[n];
  }
  return f;
}

std::vector<Term> MarketProgram::price_functional(std::size_t i, int n) const {
  const auto& iv = intervals[i];
  std::vector<Term> f{{iv.balance_row, 1.0}};
  for (std::size_t l = 0; l < iv.line_max_row.size(); ++l) {
    if (iv.line_max_row[l] < 0) continue;
    const double h = ptdf(l, static_cast<std::size_t>(n));
    if (h == 0.0) continue;
    f.push_back({iv.line_max_row[l], -h});
    f.push_back({iv.line_min_row[l], -h});
  }
  return f;
}

std::vector<int> violated_lines(const ScenarioCase& c, const std::vector<double>& flows,
                                double tol) {
  std::vector<int> out;
  for (std::size_t l = 0; l < flows.size(); ++l) {
    const double r = c.topology.lines[l].rating;
    if (std::abs(flows[l]) > r + tol * (1.0 + r)) out.push_back(static_cast<int>(l));
  }
  return out;
}

std::vector<double> nodal_prices(double balance_dual, const std::vector<double>& line_dual_min,
                                 const std::vector<double>& line_dual_max, const DenseMatrix& ptdf) {
  std::vector<double> p(ptdf.cols, balance_dual);
  for (std::size_t l = 0; l < ptdf.rows; ++l) {
    const double mu = line_dual_min[l] + line_dual_max[l];
    if (mu == 0.0) continue;
    for (std::size_t n = 0; n < ptdf.cols; ++n) p[n] -= ptdf(l, n) * mu;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Welfare

std::vector<double> bus_emissions(const ScenarioCase& c, const std::vector<double>& generation) {
  std::vector<double> x(c.topology.buses.size(), 0.0);
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const auto& gen = c.generators[g];
    x[static_cast<std::size_t>(c.topology.bus_index(gen.bus))] += gen.pollution(generation[g]);
  }
  return x;
}

double total_damage(const ScenarioCase& c, const std::vector<double>& emissions_by_bus) {
  double e = 0.0;
  for (std::size_t n = 0; n < emissions_by_bus.size(); ++n) {
    const auto* dmg = c.externalities.damage_at(c.topology.buses[n]);
    if (dmg != nullptr) e += extrapolated_value(*dmg, emissions_by_bus[n]);
  }
  return e;
}

WelfareBreakdown evaluate_interval_welfare(const ScenarioCase& c, int t,
                                           const std::vector<double>& generation,
                                           const std::vector<double>& consumption) {
  WelfareBreakdown w;
  for (std::size_t d = 0; d < c.demands.size(); ++d) {
    w.utility += c.demands[d].utility_value(t, consumption[d]);
  }
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    w.cost += extrapolated_value(c.generators[g].cost, generation[g]);
  }
  w.damage = total_damage(c, bus_emissions(c, generation));
  w.social_welfare = w.utility - w.cost - w.damage;
  return w;
}

std::vector<WelfareBreakdown> evaluate_welfare(const ScenarioCase& c, const DispatchResult& d) {
  std::vector<WelfareBreakdown> out;
  for (std::size_t t = 0; t < d.intervals.size(); ++t) {
    out.push_back(evaluate_interval_welfare(c, static_cast<int>(t), d.intervals[t].generation,
                                            d.intervals[t].consumption));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Clearing

IntervalDispatch extract_interval(const ScenarioCase& c, const MarketProgram& mp,
                                  const lp::SolveReport& report, std::size_t i, PriceRule rule,
                                  const lp::SolverSettings& settings, const std::vector<int>& price_buses) {
  const auto& iv = mp.intervals[i];
  const auto& x = report.primal;
  IntervalDispatch out;
  for (std::size_t g = 0; g < iv.gen_seg.size(); ++g) out.generation.push_back(mp.generation(x, i, static_cast<int>(g)));
  for (std::size_t d = 0; d < iv.dem_seg.size(); ++d) out.consumption.push_back(mp.consumption(x, i, static_cast<int>(d)));
  out.flows = mp.flows(x, i);
  const std::size_t nl = iv.line_max_row.size();
  out.line_dual_min.assign(nl, 0.0);
  out.line_dual_max.assign(nl, 0.0);
  for (std::size_t l = 0; l < nl; ++l) {
    if (iv.line_max_row[l] < 0) continue;
    out.line_dual_max[l] = report.duals[static_cast<std::size_t>(iv.line_max_row[l])];
    out.line_dual_min[l] = report.duals[static_cast<std::size_t>(iv.line_min_row[l])];
  }
  out.balance_dual = report.duals[static_cast<std::size_t>(iv.balance_row)];
  const DenseMatrix& h = mp.ptdf;
  out.prices = nl > 0 ? nodal_prices(out.balance_dual, out.line_dual_min, out.line_dual_max, h)
                      : std::vector<double>(c.topology.buses.size(), out.balance_dual);
  out.price_low = out.prices;
  out.price_high = out.prices;

  if (rule != PriceRule::vertex && report.primal_degenerate) {
    bool any_line = false;
    for (std::size_t l = 0; l < nl; ++l) any_line = any_line || iv.line_max_row[l] >= 0;
    const std::size_t nb = out.prices.size();
    const std::size_t evaluations = any_line ? nb : 1;
    for (std::size_t n = 0; n < evaluations; ++n) {
      if (any_line && !price_buses.empty() &&
          std::find(price_buses.begin(), price_buses.end(), static_cast<int>(n)) == price_buses.end()) {
        continue;
      }
      const auto f = mp.price_functional(i, static_cast<int>(n));
      const auto lo = lp::extreme_dual_value(mp.lp, x, f, lp::Sense::minimize, settings);
      std::optional<double> hi;
      if (rule == PriceRule::midpoint) hi = lp::extreme_dual_value(mp.lp, x, f, lp::Sense::maximize, settings);
      const auto apply = [&](std::size_t k) {
        if (lo) out.price_low[k] = std::min(*lo, out.prices[k]);
        if (hi) out.price_high[k] = std::max(*hi, out.prices[k]);
        out.prices[k] = rule == PriceRule::right_hand ? out.price_low[k]
                                                      : 0.5 * (out.price_low[k] + out.price_high[k]);
      };
      if (any_line) {
        apply(n);
      } else {
        for (std::size_t k = 0; k < nb; ++k) apply(k);
      }
    }
  }
  out.welfare = evaluate_interval_welfare(c, iv.t, out.generation, out.consumption);
  return out;
}

namespace {

bool use_single_horizon(const ScenarioCase& c) { return needs_ramps(c) && c.horizon() > 1; }

}  // namespace

lp::SolveReport solve_market_program(const ScenarioCase& c, MarketProgram& mp,
                                     const lp::SolverSettings& settings, SolveStats& stats) {
  for (;;) {
    auto rep = lp::solve_lp(mp.lp, settings);
    stats.merge(rep);
    if (!rep.optimal()) return rep;
    bool added = false;
    for (std::size_t i = 0; i < mp.intervals.size(); ++i) {
      for (int l : violated_lines(c, mp.flows(rep.primal, i), settings.feasibility_tol)) {
        mp.add_line(i, l);
        added = true;
      }
    }
    if (!added) return rep;
  }
}

DispatchResult clear_market(const ScenarioCase& c, MarketMode mode,
                            const CapacityIncrement& increment, const ClearOptions& options) {
  if (has_quadratic_utility(c)) {
    const auto obstacle = detail::exact_path_obstacle(c, mode);
    if (!obstacle.empty()) throw std::invalid_argument(obstacle);
    return detail::clear_market_exact(c, mode, increment, options);
  }
  DispatchResult out;
  out.mode = mode;
  out.increment = increment.empty() ? zero_increment(c) : increment;
  const auto settings = solver_settings_for(c);
  const PriceRule rule = options.price_rule.value_or(c.settings.price_rule);
  out.intervals.resize(static_cast<std::size_t>(c.horizon()));

  std::vector<std::vector<int>> groups;
  if (use_single_horizon(c)) {
    groups.emplace_back();
    for (int t = 0; t < c.horizon(); ++t) groups.back().push_back(t);
  } else if (!options.only_intervals.empty()) {
    for (int t : options.only_intervals) groups.push_back({t});
  } else {
    for (int t = 0; t < c.horizon(); ++t) groups.push_back({t});
  }
  for (const auto& group : groups) {
    MarketProgramSpec spec;
    spec.mode = mode;
    spec.intervals = group;
    spec.increment = out.increment;
    spec.fixed_output = options.fixed_output.empty() ? nullptr : &options.fixed_output;
    auto mp = build_market_program(c, spec);
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto t = static_cast<std::size_t>(group[i]);
      if (t < options.seed_lines.size()) {
        for (int l : options.seed_lines[t]) mp.add_line(i, l);
      }
    }
    const auto rep = solve_market_program(c, mp, settings, out.stats);
    if (!rep.optimal()) {
      out.status = rep.status;
      out.message = std::string("market LP ") + lp::to_string(rep.status) + " at interval " +
                    std::to_string(group.front() + 1) + (rep.message.empty() ? "" : ": " + rep.message);
      return out;
    }
    for (std::size_t i = 0; i < group.size(); ++i) {
      out.intervals[static_cast<std::size_t>(group[i])] = extract_interval(c, mp, rep, i, rule, settings, options.price_buses);
    }
  }
  return out;
}

DispatchResult clear_market(const ScenarioCase& c, MarketMode mode) {
  return clear_market(c, mode, zero_increment(c));
}

// ---------------------------------------------------------------------------
// Aggregate utility

AggregateUtility aggregate_utility(const ScenarioCase& c, int t,
                                   const std::vector<double>& generation_by_bus,
                                   const lp::SolverSettings& solver) {
  const std::size_t nb = c.topology.buses.size();
  bool quadratic = false;
  for (const auto& d : c.demands) quadratic = quadratic || d.is_quadratic(t);
  if (quadratic) {
    if (nb != 1) throw std::invalid_argument("quadratic utilities need a single-bus case");
    return detail::aggregate_utility_exact(c, t, generation_by_bus[0]);
  }

  const DenseMatrix h = c.topology.lines.empty() ? DenseMatrix(0, nb) : resolve_ptdf(c.topology);
  bool constant_overload = false;  // fixed injections alone overload a line
  auto build = [&](bool relax) {
    lp::LinearProgram prog(lp::Sense::maximize);
    std::vector<std::vector<int>> seg(c.demands.size());
    std::vector<Term> balance;
    double max_slope = 1.0;
    for (std::size_t d = 0; d < c.demands.size(); ++d) {
      const auto& curve = std::get<PiecewiseLinearCurve>(c.demands[d].utility[t]);
      const double dmax = c.demands[d].max_consumption[t];
      for (std::size_t k = 0; k < curve.segment_count(); ++k) {
        const double up = std::clamp(dmax - curve.breakpoints()[k], 0.0, curve.segment_width(k));
        const int v = prog.add_variable("d" + std::to_string(d) + "_" + std::to_string(k), 0.0, up,
                                        curve.slopes()[k]);
        seg[d].push_back(v);
        balance.push_back({v, 1.0});
        max_slope = std::max(max_slope, std::abs(curve.slopes()[k]));
      }
    }
    double total = 0.0;
    for (double g : generation_by_bus) total += g;
    prog.add_constraint("balance", std::move(balance), Relation::equal, total);
    const double penalty = 1e3 * max_slope;
    for (std::size_t l = 0; l < h.rows; ++l) {
      double base = 0.0;  // flow of the fixed generation
      for (std::size_t n = 0; n < nb; ++n) base += h(l, n) * generation_by_bus[n];
      std::vector<Term> row;
      for (std::size_t d = 0; d < c.demands.size(); ++d) {
        const double hd = h(l, static_cast<std::size_t>(c.topology.bus_index(c.demands[d].bus)));
        if (hd == 0.0) continue;
        for (int v : seg[d]) row.push_back({v, -hd});
      }
      const double r = c.topology.lines[l].rating;
      auto up = row, dn = row;
      if (relax) {
        up.push_back({prog.add_variable("s_up" + std::to_string(l), 0.0, lp::kInfinity, -penalty), -1.0});
        dn.push_back({prog.add_variable("s_dn" + std::to_string(l), 0.0, lp::kInfinity, -penalty), 1.0});
      }
      if (row.empty()) {
        if (std::abs(base) > r + 1e-7 * (1.0 + r)) constant_overload = true;
        continue;
      }
      prog.add_constraint("line" + std::to_string(l) + "_max", std::move(up), Relation::less_equal, r - base);
      prog.add_constraint("line" + std::to_string(l) + "_min", std::move(dn), Relation::greater_equal, -r - base);
    }
    return std::make_pair(prog, seg);
  };

  AggregateUtility out;
  for (bool relax : {false, true}) {
    auto [prog, seg] = build(relax);
    const auto rep = lp::solve_lp(prog, solver);
    if (!rep.optimal() || (constant_overload && !relax)) {
      out.status = rep.optimal() ? lp::Status::infeasible : rep.status;
      continue;
    }
    out.status = lp::Status::optimal;
    out.lines_relaxed = relax;
    out.consumption.assign(c.demands.size(), 0.0);
    out.utility = 0.0;
    for (std::size_t d = 0; d < c.demands.size(); ++d) {
      for (int v : seg[d]) out.consumption[d] += rep.primal[static_cast<std::size_t>(v)];
      out.utility += c.demands[d].utility_value(t, out.consumption[d]);
    }
    out.price = rep.duals[0];
    return out;
  }
  return out;
}

}  // namespace elmarket
