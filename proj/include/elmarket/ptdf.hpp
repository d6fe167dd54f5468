#pragma once

#include <stdexcept>
#include <string>

#include "elmarket/model.hpp"

namespace elmarket {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// PTDF from line reactances: entry (l, n) is the flow on line l (from -> to
// positive) when 1 MW is injected at bus n and withdrawn at `slack`.
// Throws NetworkError if a reactance is missing/non-positive or the network
// is disconnected.
DenseMatrix compute_ptdf(const NetworkTopology& topology, const std::string& slack);

// Explicit matrix when supplied, otherwise compute_ptdf with the topology's slack.
DenseMatrix resolve_ptdf(const NetworkTopology& topology);

}  // namespace elmarket
