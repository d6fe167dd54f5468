#include "elmarket/ptdf.hpp"

#include <Eigen/Dense>
#include <numeric>
#include <vector>

namespace elmarket {

namespace {

bool connected(const NetworkTopology& topo) {
  const auto n = topo.buses.size();
  if (n == 0) return false;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& l : topo.lines) {
    const int a = topo.bus_index(l.from);
    const int b = topo.bus_index(l.to);
    if (a >= 0 && b >= 0) parent[find(static_cast<std::size_t>(a))] = find(static_cast<std::size_t>(b));
  }
  const std::size_t root = find(0);
  for (std::size_t i = 1; i < n; ++i) {
    if (find(i) != root) return false;
  }
  return true;
}

}  // namespace

DenseMatrix compute_ptdf(const NetworkTopology& topo, const std::string& slack) {
  const int s = topo.bus_index(slack);
  if (s < 0) throw NetworkError("slack bus '" + slack + "' is not declared");
  const auto n = topo.buses.size();
  const auto nl = topo.lines.size();
  for (const auto& l : topo.lines) {
    if (!l.reactance || !(*l.reactance > 0.0)) {
      throw NetworkError("line '" + l.id + "' needs a positive reactance to build the PTDF");
    }
    if (topo.bus_index(l.from) < 0 || topo.bus_index(l.to) < 0) {
      throw NetworkError("line '" + l.id + "' references an unknown bus");
    }
  }
  if (!connected(topo)) throw NetworkError("network is disconnected");

  DenseMatrix h(nl, n);
  if (n == 1) return h;

  // Reduced susceptance matrix with the slack row/column removed.
  std::vector<int> reduced(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(i) != s) reduced[i] = next++;
  }
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(next, next);
  for (const auto& l : topo.lines) {
    const double y = 1.0 / *l.reactance;
    const int f = reduced[static_cast<std::size_t>(topo.bus_index(l.from))];
    const int t = reduced[static_cast<std::size_t>(topo.bus_index(l.to))];
    if (f >= 0) b(f, f) += y;
    if (t >= 0) b(t, t) += y;
    if (f >= 0 && t >= 0) {
      b(f, t) -= y;
      b(t, f) -= y;
    }
  }
  const Eigen::MatrixXd x = b.ldlt().solve(Eigen::MatrixXd::Identity(next, next));

  for (std::size_t li = 0; li < nl; ++li) {
    const auto& l = topo.lines[li];
    const double y = 1.0 / *l.reactance;
    const int f = reduced[static_cast<std::size_t>(topo.bus_index(l.from))];
    const int t = reduced[static_cast<std::size_t>(topo.bus_index(l.to))];
    for (std::size_t bus = 0; bus < n; ++bus) {
      const int k = reduced[bus];
      if (k < 0) continue;
      const double theta_f = f >= 0 ? x(f, k) : 0.0;
      const double theta_t = t >= 0 ? x(t, k) : 0.0;
      h(li, bus) = y * (theta_f - theta_t);
    }
  }
  return h;
}

DenseMatrix resolve_ptdf(const NetworkTopology& topology) {
  if (topology.ptdf) return *topology.ptdf;
  if (topology.lines.empty()) return DenseMatrix(0, topology.buses.size());
  return compute_ptdf(topology, topology.slack);
}

}  // namespace elmarket
