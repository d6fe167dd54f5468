#pragma once

#include <stdexcept>
#include <string>

#include "elmarket/model.hpp"
#include "elmarket/validation.hpp"

namespace elmarket {

inline constexpr int kScenarioSchemaVersion = 1;

// Malformed document: bad JSON (with line and column) or a missing/mistyped field
// (with its path, e.g. "generators[2].capacity").
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed document whose case fails validation.
class ScenarioValidationError : public std::runtime_error {
 public:
  explicit ScenarioValidationError(ValidationReport r)
      : std::runtime_error("scenario failed validation:\n" + r.to_string()), report(std::move(r)) {}
  ValidationReport report;
};

// Parses a v1 scenario document, expands growth rules and validates the case.
ScenarioCase parse_scenario(const std::string& text, bool validate = true);
ScenarioCase load_scenario(const std::string& path, bool validate = true);

// Writes the fully expanded case (per-interval values, no growth rules).
std::string scenario_to_string(const ScenarioCase& c);
void save_scenario(const ScenarioCase& c, const std::string& path);

// Accepts a file path or the name of a bundled case ("analytical_example", "rts24").
ScenarioCase load_scenario_or_bundled(const std::string& path_or_name, bool validate = true);

}  // namespace elmarket
