#include "elmarket/incentives.hpp"

#include <cmath>
#include <stdexcept>

namespace elmarket {

const char* to_string(ProfitRegime r) {
  switch (r) {
    case ProfitRegime::competitive: return "competitive";
    case ProfitRegime::taxed: return "taxed";
    case ProfitRegime::full_scheme: return "full_scheme";
  }
  return "competitive";
}

double IncentiveReport::profit(std::size_t t, std::size_t producer, ProfitRegime regime) const {
  const auto& p = intervals[t][producer];
  switch (regime) {
    case ProfitRegime::competitive: return p.profit_competitive;
    case ProfitRegime::taxed: return p.profit_taxed;
    case ProfitRegime::full_scheme: return p.profit_full;
  }
  return 0.0;
}

double IncentiveReport::horizon_profit(std::size_t producer, ProfitRegime regime) const {
  double s = 0.0;
  for (std::size_t t = 0; t < intervals.size(); ++t) s += profit(t, producer, regime);
  return s;
}

namespace {

// Generation per bus with producer `skip` removed (-1 keeps everyone).
std::vector<double> bus_generation(const ScenarioCase& c, const std::vector<double>& gen, int skip) {
  std::vector<double> out(c.topology.buses.size(), 0.0);
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    if (c.producer_index(c.generators[g].producer) == skip) continue;
    out[static_cast<std::size_t>(c.topology.bus_index(c.generators[g].bus))] += gen[g];
  }
  return out;
}

std::vector<double> without_producer(const ScenarioCase& c, const std::vector<double>& gen, int i) {
  auto out = gen;
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    if (c.producer_index(c.generators[g].producer) == i) out[g] = 0.0;
  }
  return out;
}

double damage_of(const ScenarioCase& c, const std::vector<double>& gen) {
  return total_damage(c, bus_emissions(c, gen));
}

}  // namespace

std::vector<std::vector<double>> pigouvian_tax(const ScenarioCase& c, const DispatchResult& d) {
  const std::size_t np = c.producers.size();
  std::vector<std::vector<double>> out(d.intervals.size(), std::vector<double>(np, 0.0));
  for (std::size_t t = 0; t < d.intervals.size(); ++t) {
    const auto& gen = d.intervals[t].generation;
    const double full = damage_of(c, gen);
    for (std::size_t i = 0; i < np; ++i) {
      out[t][i] = full - damage_of(c, without_producer(c, gen, static_cast<int>(i)));
    }
  }
  return out;
}

std::vector<std::vector<double>> surplus_subsidy(const ScenarioCase& c, const DispatchResult& d,
                                                 std::vector<std::vector<bool>>* relaxed) {
  const std::size_t np = c.producers.size();
  std::vector<std::vector<double>> out(d.intervals.size(), std::vector<double>(np, 0.0));
  if (relaxed != nullptr) relaxed->assign(d.intervals.size(), std::vector<bool>(np, false));
  for (std::size_t t = 0; t < d.intervals.size(); ++t) {
    const auto& iv = d.intervals[t];
    const int ti = static_cast<int>(t);
    const auto full = aggregate_utility(c, ti, bus_generation(c, iv.generation, -1));
    if (full.status != lp::Status::optimal) {
      throw std::runtime_error("utility LP infeasible at interval " + std::to_string(t + 1));
    }
    for (std::size_t i = 0; i < np; ++i) {
      double revenue = 0.0, output = 0.0;
      for (std::size_t g = 0; g < c.generators.size(); ++g) {
        if (c.producer_index(c.generators[g].producer) != static_cast<int>(i)) continue;
        revenue += iv.prices[static_cast<std::size_t>(c.topology.bus_index(c.generators[g].bus))] * iv.generation[g];
        output += iv.generation[g];
      }
      if (output == 0.0) continue;
      const auto cf = aggregate_utility(c, ti, bus_generation(c, iv.generation, static_cast<int>(i)));
      if (cf.status != lp::Status::optimal) {
        throw std::runtime_error("counterfactual utility LP infeasible for producer " +
                                 c.producers[i].id + " at interval " + std::to_string(t + 1));
      }
      if (relaxed != nullptr) (*relaxed)[t][i] = cf.lines_relaxed || full.lines_relaxed;
      out[t][i] = full.utility - cf.utility - revenue;
    }
  }
  return out;
}

IncentiveReport compute_incentives(const ScenarioCase& c, const DispatchResult& d) {
  const std::size_t np = c.producers.size();
  std::vector<std::vector<bool>> relaxed;
  const auto tax = pigouvian_tax(c, d);
  const auto sub = surplus_subsidy(c, d, &relaxed);
  IncentiveReport r;
  r.intervals.assign(d.intervals.size(), std::vector<ProducerInterval>(np));
  r.net_transfer.assign(d.intervals.size(), 0.0);
  for (std::size_t t = 0; t < d.intervals.size(); ++t) {
    const auto& iv = d.intervals[t];
    const auto full_u = aggregate_utility(c, static_cast<int>(t), bus_generation(c, iv.generation, -1));
    for (std::size_t i = 0; i < np; ++i) {
      auto& p = r.intervals[t][i];
      for (std::size_t g = 0; g < c.generators.size(); ++g) {
        const auto& gen = c.generators[g];
        if (c.producer_index(gen.producer) != static_cast<int>(i)) continue;
        const double q = iv.generation[g];
        p.output += q;
        p.emissions += gen.pollution(q);
        p.revenue += iv.prices[static_cast<std::size_t>(c.topology.bus_index(gen.bus))] * q;
        p.cost += gen.cost.value(std::min(q, gen.cost.domain_max()));
      }
      p.tax = tax[t][i];
      p.subsidy = sub[t][i];
      p.fixed_tax = c.producers[i].fixed_tax;
      p.fixed_subsidy = c.producers[i].fixed_subsidy;
      p.lines_relaxed = relaxed[t][i];
      p.profit_competitive = p.revenue - p.cost;
      p.profit_taxed = p.profit_competitive - p.tax - p.fixed_tax;
      p.profit_full = p.profit_taxed + p.subsidy + p.fixed_subsidy;
      // Direct evaluation without prices.
      double du = 0.0;
      if (p.output != 0.0) {
        const auto cf = aggregate_utility(c, static_cast<int>(t),
                                          bus_generation(c, iv.generation, static_cast<int>(i)));
        du = full_u.utility - cf.utility;
      }
      p.profit_full_direct = du - p.cost - p.tax - p.fixed_tax + p.fixed_subsidy;
      r.net_transfer[t] += p.subsidy + p.fixed_subsidy - p.tax - p.fixed_tax;
    }
  }
  return r;
}

std::vector<std::vector<double>> producer_profit(const ScenarioCase& c, const DispatchResult& d,
                                                 ProfitRegime regime) {
  const auto r = compute_incentives(c, d);
  std::vector<std::vector<double>> out(r.intervals.size());
  for (std::size_t t = 0; t < r.intervals.size(); ++t) {
    for (std::size_t i = 0; i < c.producers.size(); ++i) out[t].push_back(r.profit(t, i, regime));
  }
  return out;
}

double interval_taxed_profit(const ScenarioCase& c, int t, const IntervalDispatch& iv, int producer) {
  (void)t;
  double profit = -c.producers[static_cast<std::size_t>(producer)].fixed_tax;
  bool any = false;
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const auto& gen = c.generators[g];
    if (c.producer_index(gen.producer) != producer) continue;
    const double q = iv.generation[g];
    any = any || q != 0.0;
    profit += iv.prices[static_cast<std::size_t>(c.topology.bus_index(gen.bus))] * q;
    profit -= gen.cost.value(std::min(q, gen.cost.domain_max()));
  }
  if (any) profit -= damage_of(c, iv.generation) - damage_of(c, without_producer(c, iv.generation, producer));
  return profit;
}

SchemeChecks scheme_checks(const ScenarioCase& c, const DispatchResult& d,
                           const IncentiveReport& report) {
  (void)d;
  SchemeChecks s;
  s.individually_rational.assign(c.producers.size(), true);
  s.budget_balance = report.net_transfer;
  for (const auto& row : report.intervals) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& p = row[i];
      // Fixed fees must cover U(q - q_i) - U(q) + C_i + E(x) - E(x - x_i).
      if (p.profit_full_direct < -1e-7 * (1.0 + std::abs(p.cost))) s.individually_rational[i] = false;
      s.price_independence_residual =
          std::max(s.price_independence_residual, std::abs(p.profit_full - p.profit_full_direct));
    }
  }
  return s;
}

}  // namespace elmarket
