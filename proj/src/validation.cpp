#include "elmarket/validation.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "elmarket/ptdf.hpp"

namespace elmarket {

std::string ValidationReport::to_string() const {
  if (ok()) return "ok\n";
  std::ostringstream os;
  for (const auto& v : violations) os << v.entity << ": " << v.message << '\n';
  return os.str();
}

namespace {

struct Collector {
  ValidationReport report;
  void add(const std::string& entity, const std::string& message) {
    report.violations.push_back({entity, message});
  }
  void curve(const std::string& entity, const std::string& what, const PiecewiseLinearCurve& c,
             Curvature expected) {
    if (c.curvature() != expected) {
      add(entity, what + " must be " + to_string(expected));
    }
    for (const auto& p : c.violations()) add(entity, what + ": " + p);
  }
};

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

void check_topology(const ScenarioCase& c, Collector& out) {
  const auto& topo = c.topology;
  if (topo.buses.empty()) out.add("network", "at least one bus is required");
  std::set<std::string> seen;
  for (const auto& b : topo.buses) {
    if (!seen.insert(b).second) out.add(b, "duplicate bus id");
  }
  if (!topo.buses.empty() && topo.bus_index(topo.slack) < 0) {
    out.add("network", "slack bus '" + topo.slack + "' is not declared");
  }
  std::set<std::string> line_ids;
  bool endpoints_ok = true;
  for (const auto& l : topo.lines) {
    if (!line_ids.insert(l.id).second) out.add(l.id, "duplicate line id");
    if (topo.bus_index(l.from) < 0 || topo.bus_index(l.to) < 0) {
      out.add(l.id, "unknown bus at line endpoint");
      endpoints_ok = false;
    }
    if (l.from == l.to) out.add(l.id, "line endpoints must differ");
    if (!(std::isfinite(l.rating) && l.rating > 0.0)) out.add(l.id, "rating must be positive");
    if (l.reactance && !(*l.reactance > 0.0)) out.add(l.id, "reactance must be positive");
  }
  if (topo.ptdf) {
    const auto& h = *topo.ptdf;
    if (h.rows != topo.lines.size() || h.cols != topo.buses.size() ||
        h.values.size() != h.rows * h.cols) {
      out.add("network", "ptdf dimensions must be lines x buses");
    } else {
      for (double v : h.values) {
        if (!std::isfinite(v)) {
          out.add("network", "ptdf entries must be finite");
          break;
        }
      }
    }
  } else if (topo.buses.size() > 1 && endpoints_ok) {
    try {
      (void)compute_ptdf(topo, topo.slack);
    } catch (const NetworkError& e) {
      out.add("network", e.what());
    }
  }
}

void check_generators(const ScenarioCase& c, Collector& out) {
  std::set<std::string> ids;
  const auto horizon = static_cast<std::size_t>(std::max(c.grid.horizon, 0));
  for (const auto& g : c.generators) {
    if (!ids.insert(g.id).second) out.add(g.id, "duplicate generator id");
    if (c.topology.bus_index(g.bus) < 0) out.add(g.id, "unknown bus '" + g.bus + "'");
    if (c.producer_index(g.producer) < 0) out.add(g.id, "unknown producer '" + g.producer + "'");
    if (!finite_nonneg(g.capacity)) out.add(g.id, "capacity must be >= 0");
    if (!finite_nonneg(g.investment_cost)) out.add(g.id, "investment cost rate must be >= 0");
    if (!finite_nonneg(g.investment_cap)) out.add(g.id, "investment cap must be >= 0");
    out.curve(g.id, "cost curve", g.cost, Curvature::convex_nondecreasing);
    if (!g.cost.empty() && g.cost.domain_max() + 1e-9 < g.capacity + g.investment_cap) {
      out.add(g.id, "cost curve domain must cover capacity + investment cap");
    }
    if (g.pollution_rate.size() != g.cost.segment_count()) {
      out.add(g.id, "pollution rate needs one entry per cost segment");
    }
    for (double r : g.pollution_rate) {
      if (!finite_nonneg(r)) {
        out.add(g.id, "pollution rate must be >= 0");
        break;
      }
    }
    for (std::size_t k = 1; k < g.pollution_rate.size(); ++k) {
      if (g.pollution_rate[k] + 1e-12 < g.pollution_rate[k - 1]) {
        out.add(g.id, "pollution rate must be nondecreasing across segments (convex emissions)");
        break;
      }
    }
    if (!g.availability.empty() && g.availability.size() != horizon) {
      out.add(g.id, "availability needs one entry per interval");
    }
    for (double a : g.availability) {
      if (!(a >= 0.0 && a <= 1.0)) {
        out.add(g.id, "availability must lie in [0,1]");
        break;
      }
    }
    if (g.ramp_limit && !(*g.ramp_limit > 0.0 && *g.ramp_limit <= 1.0)) {
      out.add(g.id, "ramp limit must lie in (0,1]");
    }
  }
}

void check_demands(const ScenarioCase& c, Collector& out) {
  std::set<std::string> ids;
  const auto horizon = static_cast<std::size_t>(std::max(c.grid.horizon, 0));
  for (const auto& d : c.demands) {
    if (!ids.insert(d.id).second) out.add(d.id, "duplicate demand id");
    if (c.topology.bus_index(d.bus) < 0) out.add(d.id, "unknown bus '" + d.bus + "'");
    if (d.utility.size() != horizon) out.add(d.id, "utility needs one entry per interval");
    if (d.max_consumption.size() != horizon) {
      out.add(d.id, "max consumption needs one entry per interval");
    }
    for (double m : d.max_consumption) {
      if (!finite_nonneg(m)) {
        out.add(d.id, "max consumption must be >= 0");
        break;
      }
    }
    for (std::size_t t = 0; t < d.utility.size(); ++t) {
      const std::string where = "utility at t=" + std::to_string(t + 1);
      const double dmax = t < d.max_consumption.size() ? d.max_consumption[t] : 0.0;
      if (const auto* pwl = std::get_if<PiecewiseLinearCurve>(&d.utility[t])) {
        out.curve(d.id, where, *pwl, Curvature::concave_nondecreasing);
        if (!pwl->empty() && pwl->domain_max() + 1e-9 < dmax) {
          out.add(d.id, where + ": curve domain must cover max consumption");
        }
      } else {
        const auto& q = std::get<QuadraticUtility>(d.utility[t]);
        if (!(std::isfinite(q.linear) && std::isfinite(q.quadratic)) || q.quadratic > 0.0) {
          out.add(d.id, where + ": quadratic utility must be concave");
        } else if (q.marginal(dmax) < -1e-12) {
          out.add(d.id, where + ": quadratic utility must be nondecreasing up to max consumption");
        }
      }
    }
  }
}

}  // namespace

ValidationReport validate_case(const ScenarioCase& c) {
  Collector out;
  if (c.grid.horizon < 1) out.add("case", "horizon must be at least 1");
  if (!(c.settings.gamma > 1.0)) out.add("case", "γ must exceed 1");
  if (!(c.settings.feasibility_tol > 0.0)) out.add("case", "tolerance must be positive");
  if (c.settings.segments < 1) out.add("case", "segment count must be at least 1");
  if (c.generators.empty()) out.add("case", "at least one generator is required");
  if (c.demands.empty()) out.add("case", "at least one demand is required");
  std::set<std::string> producer_ids;
  for (const auto& p : c.producers) {
    if (!producer_ids.insert(p.id).second) out.add(p.id, "duplicate producer id");
    if (!std::isfinite(p.fixed_tax) || !std::isfinite(p.fixed_subsidy)) {
      out.add(p.id, "fixed fees must be finite");
    }
  }
  check_topology(c, out);
  check_generators(c, out);
  check_demands(c, out);
  for (const auto& dmg : c.externalities.damages) {
    if (c.topology.bus_index(dmg.bus) < 0) out.add(dmg.bus, "damage curve on unknown bus");
    out.curve(dmg.bus, "damage curve", dmg.damage, Curvature::convex_nondecreasing);
  }
  return out.report;
}

}  // namespace elmarket
