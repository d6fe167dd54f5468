#pragma once

#include <string>
#include <vector>

#include "elmarket/model.hpp"

namespace elmarket {

struct Violation {
  std::string entity;   // offending entity id ("case" for global issues)
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_case(const ScenarioCase& c);

}  // namespace elmarket
