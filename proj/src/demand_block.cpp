#include "elmarket/demand_block.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace elmarket {

using lp::Relation;
using lp::Term;

DemandBlock append_demand_equilibrium_block(MarketProgram& mp, const ScenarioCase& c,
                                            std::size_t i, double gamma) {
  if (!(gamma > 1.0)) throw std::invalid_argument("big-M factor must exceed 1");
  const std::size_t nl = c.topology.lines.size();
  for (std::size_t l = 0; l < nl; ++l) mp.add_line(i, static_cast<int>(l));

  auto& prog = mp.lp;
  const auto& iv = mp.intervals[i];
  const int t = iv.t;
  const std::string ts = "_t" + std::to_string(t + 1);
  DemandBlock b;
  b.interval = i;

  double max_b = 0.0;
  for (const auto& segs : iv.dem_seg) {
    for (int v : segs) max_b = std::max(max_b, std::abs(prog.variable(v).objective));
  }
  max_b = std::max(max_b, 1.0);

  b.lambda = prog.add_variable("lambda" + ts, -lp::kInfinity, lp::kInfinity);
  for (std::size_t l = 0; l < nl; ++l) {
    const std::string ls = "_l" + std::to_string(l + 1) + ts;
    b.mu_lmin.push_back(prog.add_variable("mu_lmin" + ls, -lp::kInfinity, 0.0));
    b.mu_lmax.push_back(prog.add_variable("mu_lmax" + ls, 0.0, lp::kInfinity));
    b.z_lmin.push_back(prog.add_binary("z_lmin" + ls));
    b.z_lmax.push_back(prog.add_binary("z_lmax" + ls));
  }

  const std::size_t nd = iv.dem_seg.size();
  b.mu_dmin.resize(nd);
  b.mu_dmax.resize(nd);
  b.z_dmin.resize(nd);
  b.z_dmax.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t k = 0; k < iv.dem_seg[d].size(); ++k) {
      const int x = iv.dem_seg[d][k];
      const auto& var = prog.variable(x);
      const double bd = var.objective;
      const double dmax = var.upper;
      const std::string ks = "_" + c.demands[d].id + "_s" + std::to_string(k) + ts;
      const int mn = prog.add_variable("mu_dmin" + ks, -lp::kInfinity, 0.0);
      const int mx = prog.add_variable("mu_dmax" + ks, 0.0, lp::kInfinity);
      const int zn = prog.add_binary("z_dmin" + ks);
      const int zx = prog.add_binary("z_dmax" + ks);
      b.mu_dmin[d].push_back(mn);
      b.mu_dmax[d].push_back(mx);
      b.z_dmin[d].push_back(zn);
      b.z_dmax[d].push_back(zx);

      std::vector<Term> dual{{mn, 1.0}, {mx, 1.0}, {b.lambda, 1.0}};
      for (std::size_t l = 0; l < nl; ++l) {
        const double h = mp.ptdf(l, static_cast<std::size_t>(mp.dem_bus[d]));
        if (h == 0.0) continue;
        dual.push_back({b.mu_lmin[l], -h});
        dual.push_back({b.mu_lmax[l], -h});
      }
      prog.add_constraint("dual" + ks, std::move(dual), Relation::equal, bd);

      // d <= g Dmax (1 - z^Dmin);  mu^Dmin >= -g max(b) z^Dmin
      prog.add_constraint("cs_dmin_p" + ks, {{x, 1.0}, {zn, gamma * dmax}}, Relation::less_equal,
                          gamma * dmax);
      prog.add_constraint("cs_dmin_m" + ks, {{mn, 1.0}, {zn, gamma * max_b}},
                          Relation::greater_equal, 0.0);
      // d >= Dmax - g Dmax (1 - z^Dmax);  mu^Dmax <= g b z^Dmax
      prog.add_constraint("cs_dmax_p" + ks, {{x, 1.0}, {zx, -gamma * dmax}},
                          Relation::greater_equal, dmax - gamma * dmax);
      prog.add_constraint("cs_dmax_m" + ks, {{mx, 1.0}, {zx, -gamma * std::max(bd, 0.0)}},
                          Relation::less_equal, 0.0);
    }
  }

  for (std::size_t l = 0; l < nl; ++l) {
    const double f = mp.line_rating[l];
    const std::string ls = "_l" + std::to_string(l + 1) + ts;
    const auto& flow = prog.constraint(iv.line_max_row[l]).terms;
    // flow <= -F + (g+1) F (1 - z^Lmin);  mu^Lmin >= -g max(b) z^Lmin
    auto row = flow;
    row.push_back({b.z_lmin[l], (gamma + 1.0) * f});
    prog.add_constraint("cs_lmin_p" + ls, std::move(row), Relation::less_equal, gamma * f);
    prog.add_constraint("cs_lmin_m" + ls, {{b.mu_lmin[l], 1.0}, {b.z_lmin[l], gamma * max_b}},
                        Relation::greater_equal, 0.0);
    // flow >= F - (g+1) F (1 - z^Lmax);  mu^Lmax <= g max(b) z^Lmax
    row = flow;
    row.push_back({b.z_lmax[l], -(gamma + 1.0) * f});
    prog.add_constraint("cs_lmax_p" + ls, std::move(row), Relation::greater_equal, -gamma * f);
    prog.add_constraint("cs_lmax_m" + ls, {{b.mu_lmax[l], 1.0}, {b.z_lmax[l], -gamma * max_b}},
                        Relation::less_equal, 0.0);
  }
  return b;
}

StandaloneDemandBlock demand_equilibrium_block(const ScenarioCase& c, int t, double gamma,
                                               const std::vector<double>& generation) {
  MarketProgramSpec spec;
  spec.mode = MarketMode::competitive;
  spec.intervals = {t};
  spec.increment = zero_increment(c);
  std::vector<std::vector<double>> fixed(static_cast<std::size_t>(c.horizon()));
  fixed[static_cast<std::size_t>(t)] = generation;
  spec.fixed_output = &fixed;
  spec.ramps = false;
  StandaloneDemandBlock out{build_market_program(c, spec), {}};
  out.block = append_demand_equilibrium_block(out.program, c, 0, gamma);
  return out;
}

lp::IncumbentHeuristic demand_block_heuristic(const ScenarioCase& c, const MarketProgram& mp,
                                              const std::vector<DemandBlock>& blocks) {
  return [&c, &mp, blocks](const lp::SolveReport& relax) -> std::optional<std::vector<double>> {
    std::vector<double> x = relax.primal;
    const std::size_t nb = c.topology.buses.size();
    for (const auto& b : blocks) {
      const auto& iv = mp.intervals[b.interval];
      std::vector<double> bus_gen(nb, 0.0);
      for (std::size_t g = 0; g < iv.gen_seg.size(); ++g) {
        bus_gen[static_cast<std::size_t>(mp.gen_bus[g])] += mp.generation(relax.primal, b.interval, static_cast<int>(g));
      }
      const auto agg = aggregate_utility(c, iv.t, bus_gen);
      if (agg.status != lp::Status::optimal || agg.lines_relaxed) return std::nullopt;
      std::vector<double> bus_inj = bus_gen;
      for (std::size_t d = 0; d < iv.dem_seg.size(); ++d) {
        double rest = agg.consumption[d];
        bus_inj[static_cast<std::size_t>(mp.dem_bus[d])] -= rest;
        for (std::size_t k = 0; k < iv.dem_seg[d].size(); ++k) {
          const double w = mp.lp.variable(iv.dem_seg[d][k]).upper;
          const double v = std::clamp(rest, 0.0, w);
          rest -= v;
          const double tol = 1e-9 * (1.0 + w);
          x[static_cast<std::size_t>(b.z_dmin[d][k])] = v <= tol ? 1.0 : 0.0;
          x[static_cast<std::size_t>(b.z_dmax[d][k])] = v >= w - tol ? 1.0 : 0.0;
        }
      }
      for (std::size_t l = 0; l < b.z_lmin.size(); ++l) {
        double flow = 0.0;
        for (std::size_t n = 0; n < nb; ++n) flow += mp.ptdf(l, n) * bus_inj[n];
        const double f = mp.line_rating[l];
        const double tol = 1e-7 * (1.0 + f);
        x[static_cast<std::size_t>(b.z_lmin[l])] = flow <= -f + tol ? 1.0 : 0.0;
        x[static_cast<std::size_t>(b.z_lmax[l])] = flow >= f - tol ? 1.0 : 0.0;
      }
    }
    return x;
  };
}

}  // namespace elmarket
