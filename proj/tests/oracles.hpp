#pragma once
// Independent reference computations used only by tests.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "elmarket/model.hpp"

namespace oracle {

// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    if (std::abs(a[p][c]) < 1e-14) throw std::runtime_error("singular system");
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

// Line flows for a balanced injection vector by solving B theta = p with the
// slack angle fixed at zero.
inline std::vector<double> dc_flow(const elmarket::NetworkTopology& topo,
                                   const std::vector<double>& p) {
  const std::size_t n = topo.buses.size();
  const int s = topo.bus_index(topo.slack);
  std::vector<std::vector<double>> b(n, std::vector<double>(n, 0.0));
  for (const auto& l : topo.lines) {
    const auto f = static_cast<std::size_t>(topo.bus_index(l.from));
    const auto t = static_cast<std::size_t>(topo.bus_index(l.to));
    const double y = 1.0 / *l.reactance;
    b[f][f] += y;
    b[t][t] += y;
    b[f][t] -= y;
    b[t][f] -= y;
  }
  std::vector<std::vector<double>> red;
  std::vector<double> rhs;
  std::vector<int> map(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(i) == s) continue;
    map[i] = static_cast<int>(rhs.size());
    rhs.push_back(p[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (map[i] < 0) continue;
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j) {
      if (map[j] >= 0) row.push_back(b[i][j]);
    }
    red.push_back(row);
  }
  const auto theta_red = rhs.empty() ? std::vector<double>{} : solve_dense(red, rhs);
  std::vector<double> theta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (map[i] >= 0) theta[i] = theta_red[static_cast<std::size_t>(map[i])];
  }
  std::vector<double> flows;
  for (const auto& l : topo.lines) {
    const auto f = static_cast<std::size_t>(topo.bus_index(l.from));
    const auto t = static_cast<std::size_t>(topo.bus_index(l.to));
    flows.push_back((theta[f] - theta[t]) / *l.reactance);
  }
  return flows;
}

}  // namespace oracle
