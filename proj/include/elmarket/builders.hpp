#pragma once

#include <string>
#include <vector>

#include "elmarket/model.hpp"

namespace elmarket {

// One-bus, two-producer, three-interval example with exact quadratic utilities.
ScenarioCase build_analytical_example();

struct Rts24Options {
  int horizon = 20;
  double line_rating_factor = 0.7;
  double demand_growth = 0.025;   // per interval
  double utility_growth = 0.04;   // per interval
  int segments = 10;
  // Demand utility slopes at t = 1, highest first ($/MWh), one per segment of
  // equal width D_t / segments.
  std::vector<double> utility_slopes = {300, 280, 260, 240, 220, 200, 180, 160, 140, 120};
  double investment_cost = 2000.0;    // $/MW, same for every technology
  double investment_cap_share = 0.5;  // cap as a share of installed capacity
  std::string data_dir;               // empty: default_data_dir()
};

// IEEE RTS-24 variant; producers are assigned generators at random (seeded)
// so that every producer holds 6-14% of total capacity.
ScenarioCase build_rts24_case(unsigned seed, const Rts24Options& options = {});

// Directory holding bundled data: $ELMARKET_DATA_DIR if set, else the
// source-tree data directory.
std::string default_data_dir();

}  // namespace elmarket
