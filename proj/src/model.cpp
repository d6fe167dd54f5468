#include "elmarket/model.hpp"

#include <algorithm>
#include <cmath>

namespace elmarket {

int NetworkTopology::bus_index(std::string_view id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i] == id) return static_cast<int>(i);
  }
  return -1;
}

const char* to_string(Technology t) {
  switch (t) {
    case Technology::renewable: return "renewable";
    case Technology::hydro: return "hydro";
    case Technology::nuclear: return "nuclear";
    case Technology::coal: return "coal";
    case Technology::fuel_oil: return "fuel-oil";
    case Technology::gas: return "gas";
    case Technology::custom: return "custom";
  }
  return "custom";
}

std::optional<Technology> technology_from_string(std::string_view s) {
  for (Technology t : {Technology::renewable, Technology::hydro, Technology::nuclear,
                       Technology::coal, Technology::fuel_oil, Technology::gas,
                       Technology::custom}) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

const char* to_string(PriceRule r) {
  switch (r) {
    case PriceRule::right_hand: return "right_hand";
    case PriceRule::midpoint: return "midpoint";
    case PriceRule::vertex: return "vertex";
  }
  return "right_hand";
}

std::optional<PriceRule> price_rule_from_string(std::string_view s) {
  for (PriceRule r : {PriceRule::right_hand, PriceRule::midpoint, PriceRule::vertex}) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

double GeneratorSpec::pollution(double q) const {
  const auto& b = cost.breakpoints();
  double x = 0.0;
  for (std::size_t k = 0; k < pollution_rate.size() && k + 1 < b.size(); ++k) {
    if (q <= b[k]) break;
    x += pollution_rate[k] * (std::min(q, b[k + 1]) - b[k]);
  }
  return x;
}

double DemandSpec::utility_value(int t, double d) const {
  const auto& u = utility[static_cast<std::size_t>(t)];
  if (const auto* q = std::get_if<QuadraticUtility>(&u)) return q->value(d);
  return std::get<PiecewiseLinearCurve>(u).value(d);
}

double DemandSpec::marginal_utility(int t, double d) const {
  const auto& u = utility[static_cast<std::size_t>(t)];
  if (const auto* q = std::get_if<QuadraticUtility>(&u)) return q->marginal(d);
  return std::get<PiecewiseLinearCurve>(u).marginal(d);
}

const PiecewiseLinearCurve* ExternalitySpec::damage_at(std::string_view bus) const {
  for (const auto& d : damages) {
    if (d.bus == bus) return &d.damage;
  }
  return nullptr;
}

double ExternalitySpec::damage_value(std::string_view bus, double emissions) const {
  const auto* curve = damage_at(bus);
  if (curve == nullptr || emissions <= 0.0) return 0.0;
  return curve->value(emissions);
}

int ScenarioCase::producer_index(std::string_view id) const {
  for (std::size_t i = 0; i < producers.size(); ++i) {
    if (producers[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

CapacityIncrement zero_increment(const ScenarioCase& c) {
  return CapacityIncrement(c.generators.size(), 0.0);
}

bool has_quadratic_utility(const ScenarioCase& c) {
  for (const auto& d : c.demands) {
    for (const auto& u : d.utility) {
      if (std::holds_alternative<QuadraticUtility>(u)) return true;
    }
  }
  return false;
}

ScenarioCase linearize_utilities(const ScenarioCase& c) {
  ScenarioCase out = c;
  for (auto& d : out.demands) {
    for (std::size_t t = 0; t < d.utility.size(); ++t) {
      const auto* q = std::get_if<QuadraticUtility>(&d.utility[t]);
      if (q == nullptr) continue;
      const double dmax = d.max_consumption[t];
      if (!(dmax > 0.0)) {
        d.utility[t] = PiecewiseLinearCurve::linear(std::max(q->linear, 0.0), 1.0,
                                                    Curvature::concave_nondecreasing);
        continue;
      }
      std::vector<double> b{0.0};
      if (c.settings.segment_width > 0.0) {
        const double w = c.settings.segment_width;
        const auto n = static_cast<long>(std::floor(dmax / w + 1e-9));
        for (long k = 1; k <= n; ++k) b.push_back(std::min(dmax, k * w));
        if (dmax - b.back() > 1e-9 * (1.0 + dmax)) b.push_back(dmax);
        b.back() = dmax;
      } else {
        const int n = std::max(1, c.settings.segments);
        for (int k = 1; k <= n; ++k) b.push_back(dmax * k / n);
        b.back() = dmax;
      }
      d.utility[t] =
          pwl_from_quadratic(q->linear, q->quadratic, b, Curvature::concave_nondecreasing);
    }
  }
  return out;
}

}  // namespace elmarket
