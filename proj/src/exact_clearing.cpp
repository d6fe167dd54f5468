// Closed-form clearing of step supply against affine demand functions.
// Each quadratic utility c d + a d^2 (a <= 0) capped at D gives the demand
// d(p) = clamp((p - c) / (2a), 0, D); a = 0 is a flat step at p = c.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "elmarket/market.hpp"
#include "market_internal.hpp"

namespace elmarket {

namespace {

struct Demand {
  double c = 0.0;
  double a = 0.0;  // <= 0
  double cap = lp::kInfinity;
};

class DemandSet {
 public:
  explicit DemandSet(std::vector<Demand> ds) : ds_(std::move(ds)) {
    for (const auto& d : ds_) {
      total_ += d.cap;
      breaks_.push_back(d.c);
      if (d.a < 0.0 && std::isfinite(d.cap)) breaks_.push_back(d.c + 2.0 * d.a * d.cap);
    }
    std::sort(breaks_.begin(), breaks_.end(), std::greater<>());
    breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
  }

  double total() const { return total_; }

  // Demand just below (upper=true) or just above price p.
  double at(double p, bool upper) const {
    double s = 0.0;
    for (const auto& d : ds_) s += single(d, p, upper);
    return s;
  }

  // sup{p : D(p) > s} for s below total demand; otherwise the highest price
  // at which every consumer is saturated.
  double inverse(double s) const {
    if (!(s < total_)) {
      double p = lp::kInfinity;
      for (const auto& d : ds_) p = std::min(p, d.a < 0.0 ? d.c + 2.0 * d.a * d.cap : d.c);
      return p;
    }
    for (std::size_t k = 0; k < breaks_.size(); ++k) {
      const double hi = breaks_[k];
      if (at(hi, true) > s) return hi;
      const double lo = k + 1 < breaks_.size() ? breaks_[k + 1] : -lp::kInfinity;
      // On (lo, hi) demand is affine: D(p) = base + slope * (hi - p).
      const double base = at(hi, true);
      double slope = 0.0;
      for (const auto& d : ds_) {
        if (d.a >= 0.0) continue;
        const double mid = std::isfinite(lo) ? 0.5 * (lo + hi) : hi - 1.0;
        const double x = (mid - d.c) / (2.0 * d.a);
        if (x > 0.0 && x < d.cap) slope += -1.0 / (2.0 * d.a);
      }
      if (slope <= 0.0) continue;
      const double p = hi - (s - base) / slope;
      if (!std::isfinite(lo) || p > lo) return p;
    }
    return breaks_.empty() ? 0.0 : breaks_.back();
  }

  // Consumption per demand at price p summing to q.
  std::vector<double> allocate(double p, double q) const {
    std::vector<double> out(ds_.size(), 0.0);
    double used = 0.0;
    for (std::size_t i = 0; i < ds_.size(); ++i) {
      out[i] = single(ds_[i], p, false);
      used += out[i];
    }
    for (std::size_t i = 0; i < ds_.size() && used < q; ++i) {
      const double room = single(ds_[i], p, true) - out[i];
      const double add = std::min(room, q - used);
      if (add > 0.0) {
        out[i] += add;
        used += add;
      }
    }
    return out;
  }

 private:
  static double single(const Demand& d, double p, bool upper) {
    if (d.a < 0.0) return std::clamp((p - d.c) / (2.0 * d.a), 0.0, d.cap);
    if (p < d.c || (upper && p == d.c)) return d.cap;
    return 0.0;
  }

  std::vector<Demand> ds_;
  std::vector<double> breaks_;
  double total_ = 0.0;
};

struct Step {
  double cost = 0.0;
  double width = 0.0;
  int owner = 0;  // generator index, or merit index for the affine case
};

struct MeritOutcome {
  std::vector<double> dispatch;  // per step
  double quantity = 0.0;
  double price = 0.0;
};

// Must-run supply `preload` is absorbed first, then steps in merit order.
MeritOutcome walk_merit(const DemandSet& demand, const std::vector<Step>& steps, double preload) {
  MeritOutcome out;
  out.dispatch.assign(steps.size(), 0.0);
  std::vector<std::size_t> order(steps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return steps[x].cost < steps[y].cost; });
  double s = preload;
  for (std::size_t k : order) {
    const auto& st = steps[k];
    if (st.width <= 0.0) continue;
    if (demand.at(st.cost, true) <= s) break;
    if (demand.at(st.cost, false) > s + st.width) {
      out.dispatch[k] = st.width;
      s += st.width;
      continue;
    }
    const double q = std::clamp(demand.at(st.cost, true), s, s + st.width);
    out.dispatch[k] = q - s;
    out.quantity = q;
    out.price = st.cost;
    return out;
  }
  out.quantity = s;
  out.price = demand.inverse(s);
  return out;
}

}  // namespace

namespace detail {

std::string exact_path_obstacle(const ScenarioCase& c, MarketMode mode) {
  if (c.topology.buses.size() != 1) {
    return "quadratic utilities need a single-bus case; linearize them for networks";
  }
  for (const auto& d : c.demands) {
    for (int t = 0; t < c.horizon(); ++t) {
      if (!d.is_quadratic(t)) return "demand " + d.id + " mixes quadratic and PWL utilities";
    }
  }
  if (mode == MarketMode::optimal) {
    for (const auto& b : c.externalities.damages) {
      if (b.damage.segment_count() > 1) return "exact clearing needs a linear damage curve";
    }
  }
  if (c.horizon() > 1) {
    for (const auto& g : c.generators) {
      if (g.ramp_limit && *g.ramp_limit < 1.0) return "exact clearing does not model ramp limits";
    }
  }
  return {};
}

namespace {

DemandSet demand_at(const ScenarioCase& c, int t) {
  std::vector<Demand> ds;
  for (const auto& d : c.demands) {
    const auto& u = std::get<QuadraticUtility>(d.utility[static_cast<std::size_t>(t)]);
    ds.push_back({u.linear, u.quadratic, d.max_consumption[static_cast<std::size_t>(t)]});
  }
  return DemandSet(std::move(ds));
}

}  // namespace

DispatchResult clear_market_exact(const ScenarioCase& c, MarketMode mode,
                                  const CapacityIncrement& increment,
                                  const ClearOptions& options) {
  DispatchResult out;
  out.mode = mode;
  out.exact = true;
  out.increment = increment.empty() ? zero_increment(c) : increment;
  const auto* fixed = options.fixed_output.empty() ? nullptr : &options.fixed_output;
  const int ng = static_cast<int>(c.generators.size());
  for (int t = 0; t < c.horizon(); ++t) {
    const DemandSet demand = demand_at(c, t);
    std::vector<Step> steps;
    std::vector<double> gen(static_cast<std::size_t>(ng), 0.0);
    double preload = 0.0;
    for (int g = 0; g < ng; ++g) {
      const auto& spec = c.generators[static_cast<std::size_t>(g)];
      if (is_fixed(fixed, t, g)) {
        gen[g] = (*fixed)[t][g];
        preload += gen[g];
        continue;
      }
      const double cap = spec.availability_at(t) * (spec.capacity + out.increment[g]);
      const auto ext = mode == MarketMode::optimal ? linear_externality_cost(c, g)
                                                   : std::vector<double>(spec.cost.segment_count(), 0.0);
      const auto& b = spec.cost.breakpoints();
      for (std::size_t s = 0; s < spec.cost.segment_count(); ++s) {
        const double w = std::clamp(cap - b[s], 0.0, spec.cost.segment_width(s));
        steps.push_back({spec.cost.slopes()[s] + (*ext)[s], w, g});
      }
    }
    if (preload > demand.total() + 1e-9 * (1.0 + preload)) {
      out.status = lp::Status::infeasible;
      out.message = "fixed output exceeds maximum consumption at interval " + std::to_string(t + 1);
      return out;
    }
    const auto m = walk_merit(demand, steps, preload);
    for (std::size_t k = 0; k < steps.size(); ++k) gen[steps[k].owner] += m.dispatch[k];
    IntervalDispatch iv;
    iv.generation = gen;
    iv.consumption = demand.allocate(m.price, m.quantity);
    iv.prices = {m.price};
    iv.price_low = iv.prices;
    iv.price_high = iv.prices;
    iv.balance_dual = m.price;
    iv.welfare = evaluate_interval_welfare(c, t, iv.generation, iv.consumption);
    out.intervals.push_back(std::move(iv));
  }
  return out;
}

AggregateUtility aggregate_utility_exact(const ScenarioCase& c, int t, double generation) {
  AggregateUtility out;
  const DemandSet demand = demand_at(c, t);
  if (generation > demand.total() + 1e-9 * (1.0 + generation) || generation < -1e-12) {
    out.status = lp::Status::infeasible;
    return out;
  }
  const double q = std::clamp(generation, 0.0, demand.total());
  out.price = demand.inverse(q);
  out.consumption = demand.allocate(out.price, q);
  for (std::size_t d = 0; d < c.demands.size(); ++d) {
    out.utility += c.demands[d].utility_value(t, out.consumption[d]);
  }
  return out;
}

}  // namespace detail

AffineClearing single_bus_affine_clearing(const std::vector<MeritStep>& merit, double c,
                                          double d_max) {
  const DemandSet demand({{c, -0.5, d_max}});
  std::vector<Step> steps;
  for (std::size_t k = 0; k < merit.size(); ++k) {
    steps.push_back({merit[k].marginal_cost, merit[k].capacity, static_cast<int>(k)});
  }
  const auto m = walk_merit(demand, steps, 0.0);
  AffineClearing out;
  out.dispatch = m.dispatch;
  out.quantity = m.quantity;
  out.price = m.price;
  out.social_welfare = c * m.quantity - 0.5 * m.quantity * m.quantity;
  for (std::size_t k = 0; k < merit.size(); ++k) out.social_welfare -= merit[k].marginal_cost * m.dispatch[k];
  return out;
}

}  // namespace elmarket
