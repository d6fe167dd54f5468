#pragma once

#include <string>
#include <vector>

#include "elmarket/results.hpp"

namespace elmarket {

struct GoldenCheck {
  std::string name;
  double expected = 0.0;
  double actual = 0.0;
  double tolerance = 1e-6;
  bool pass() const;
};

struct GoldenRun {
  std::vector<GoldenCheck> checks;
  ResultBundle bundle;  // both spot modes, incentives and investment runs
  bool all_pass() const;
};

// Runs the analytical example end to end and compares it with the reference
// spot, post-investment and investment figures. Producer 2's per-interval
// profit entries of the reference table are replaced by the horizon closed
// form 14k - k^2 (see the bundle notes).
GoldenRun run_analytical_example_checks();

}  // namespace elmarket
