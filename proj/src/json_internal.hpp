#pragma once

#include "elmarket/model.hpp"
#include "json.hpp"

namespace elmarket::detail {

nlohmann::ordered_json case_to_json(const ScenarioCase& c);
// Throws ScenarioError on missing or mistyped fields.
ScenarioCase case_from_json(const nlohmann::json& j);

}  // namespace elmarket::detail
