#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "elmarket/curve.hpp"

namespace elmarket {

// Row-major dense matrix used for PTDFs.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  bool operator==(const DenseMatrix&) const = default;
};

struct TimeGrid {
  int horizon = 1;  // intervals t = 1..horizon; stored 0-based
  bool operator==(const TimeGrid&) const = default;
};

struct LineSpec {
  std::string id;
  std::string from;
  std::string to;
  std::optional<double> reactance;  // per unit
  double rating = 0.0;              // MW
  bool operator==(const LineSpec&) const = default;
};

struct NetworkTopology {
  std::vector<std::string> buses;
  std::vector<LineSpec> lines;
  std::string slack;
  std::optional<DenseMatrix> ptdf;  // lines x buses; wins over reactances

  int bus_index(std::string_view id) const;
  bool operator==(const NetworkTopology&) const = default;
};

enum class Technology { renewable, hydro, nuclear, coal, fuel_oil, gas, custom };
const char* to_string(Technology t);
std::optional<Technology> technology_from_string(std::string_view s);

struct ProducerSpec {
  std::string id;
  double fixed_tax = 0.0;      // phi|0
  double fixed_subsidy = 0.0;  // chi|0
  bool operator==(const ProducerSpec&) const = default;
};

struct GeneratorSpec {
  std::string id;
  std::string bus;
  std::string producer;
  Technology technology = Technology::custom;
  PiecewiseLinearCurve cost;           // convex, domain >= capacity + investment_cap
  std::vector<double> pollution_rate;  // per cost segment, emissions per MWh
  double capacity = 0.0;               // K, MW
  std::vector<double> availability;    // per interval in [0,1]; empty means 1
  std::optional<double> ramp_limit;    // relative change per interval
  double investment_cost = 0.0;        // $/MW
  double investment_cap = 0.0;         // MW

  double availability_at(int t) const {
    return availability.empty() ? 1.0 : availability[static_cast<std::size_t>(t)];
  }
  // Emissions produced at output q.
  double pollution(double q) const;
  bool operator==(const GeneratorSpec&) const = default;
};

using UtilityCurve = std::variant<PiecewiseLinearCurve, QuadraticUtility>;

struct DemandSpec {
  std::string id;
  std::string bus;
  std::vector<UtilityCurve> utility;     // one per interval
  std::vector<double> max_consumption;   // one per interval, MW

  bool is_quadratic(int t) const {
    return std::holds_alternative<QuadraticUtility>(utility[static_cast<std::size_t>(t)]);
  }
  double utility_value(int t, double d) const;
  double marginal_utility(int t, double d) const;
  bool operator==(const DemandSpec&) const = default;
};

struct BusDamage {
  std::string bus;
  PiecewiseLinearCurve damage;  // convex, over total bus emissions
  bool operator==(const BusDamage&) const = default;
};

struct ExternalitySpec {
  std::vector<BusDamage> damages;  // buses without an entry have zero damage

  const PiecewiseLinearCurve* damage_at(std::string_view bus) const;
  double damage_value(std::string_view bus, double emissions) const;
  bool operator==(const ExternalitySpec&) const = default;
};

enum class PriceRule {
  right_hand,  // smallest price on the optimal dual face
  midpoint,    // mean of smallest and largest
  vertex       // whatever the simplex basis gives
};
const char* to_string(PriceRule r);
std::optional<PriceRule> price_rule_from_string(std::string_view s);

struct ModelSettings {
  double gamma = 2.0;
  double feasibility_tol = 1e-7;
  double integrality_tol = 1e-6;
  double gap_tol = 1e-6;
  int segments = 10;           // PWL segments when linearizing quadratics
  double segment_width = 0.0;  // if > 0, overrides `segments` with fixed-width pieces
  PriceRule price_rule = PriceRule::right_hand;
  bool operator==(const ModelSettings&) const = default;
};

struct ScenarioCase {
  std::string name;
  std::string notes;
  NetworkTopology topology;
  std::vector<ProducerSpec> producers;
  std::vector<GeneratorSpec> generators;
  std::vector<DemandSpec> demands;
  ExternalitySpec externalities;
  TimeGrid grid;
  ModelSettings settings;

  int horizon() const { return grid.horizon; }
  int producer_index(std::string_view id) const;
  bool operator==(const ScenarioCase&) const = default;
};

// Capacity increments, one per generator, in case order.
using CapacityIncrement = std::vector<double>;
CapacityIncrement zero_increment(const ScenarioCase& c);

// Replace every quadratic utility by its PWL interpolation using
// settings.segments (or settings.segment_width when positive).
ScenarioCase linearize_utilities(const ScenarioCase& c);
bool has_quadratic_utility(const ScenarioCase& c);

}  // namespace elmarket
