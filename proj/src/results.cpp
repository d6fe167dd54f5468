#include "elmarket/results.hpp"

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "elmarket/scenario_io.hpp"
#include "json_internal.hpp"

namespace elmarket {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

double average_price(const IntervalDispatch& iv) {
  if (iv.prices.empty()) return 0.0;
  return std::accumulate(iv.prices.begin(), iv.prices.end(), 0.0) / static_cast<double>(iv.prices.size());
}

namespace {

std::string num(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <class... Args>
  void row(const Args&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  ~Csv() = default;

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double x) { return num(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  std::ofstream out_;
};

void write_series(const fs::path& path, const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t t = 0; t < values.size(); ++t) out << t + 1 << ' ' << num(values[t]) << '\n';
}

std::string safe(std::string s) {
  for (char& ch : s) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')) ch = '_';
  }
  return s;
}

const char* kSpotHeader = "t,generation,consumption,average_price,utility,cost,damage,social_welfare";

template <class Table>
void spot_rows(Table& csv, const std::string& run, const DispatchResult& d) {
  for (std::size_t t = 0; t < d.intervals.size(); ++t) {
    const auto& iv = d.intervals[t];
    const double gen = std::accumulate(iv.generation.begin(), iv.generation.end(), 0.0);
    const double con = std::accumulate(iv.consumption.begin(), iv.consumption.end(), 0.0);
    csv.row(run, static_cast<int>(t + 1), gen, con, average_price(iv), iv.welfare.utility, iv.welfare.cost,
            iv.welfare.damage, iv.welfare.social_welfare);
  }
}

void detail_rows(Csv& gen, Csv& con, Csv& pr, Csv& fl, const ScenarioCase& c, const std::string& run,
                 const DispatchResult& d) {
  for (std::size_t t = 0; t < d.intervals.size(); ++t) {
    const auto& iv = d.intervals[t];
    const int tt = static_cast<int>(t + 1);
    for (std::size_t g = 0; g < iv.generation.size(); ++g) {
      gen.row(run, tt, c.generators[g].id, c.generators[g].producer, c.generators[g].bus, iv.generation[g]);
    }
    for (std::size_t k = 0; k < iv.consumption.size(); ++k) {
      con.row(run, tt, c.demands[k].id, c.demands[k].bus, iv.consumption[k]);
    }
    for (std::size_t n = 0; n < iv.prices.size(); ++n) {
      pr.row(run, tt, c.topology.buses[n], iv.prices[n], iv.price_low[n], iv.price_high[n]);
    }
    for (std::size_t l = 0; l < iv.flows.size(); ++l) {
      fl.row(run, tt, c.topology.lines[l].id, iv.flows[l], c.topology.lines[l].rating);
    }
  }
}

// --- JSON conversion -------------------------------------------------------

lp::Status status_from_string(const std::string& s) {
  for (auto st : {lp::Status::optimal, lp::Status::infeasible, lp::Status::unbounded, lp::Status::iteration_limit,
                  lp::Status::node_limit}) {
    if (s == lp::to_string(st)) return st;
  }
  throw std::runtime_error("unknown solver status '" + s + "'");
}

ordered_json stats_json(const SolveStats& s) {
  return {{"lp_solves", s.lp_solves},
          {"simplex_iterations", s.simplex_iterations},
          {"worst_duality_gap", s.worst_duality_gap},
          {"worst_primal_residual", s.worst_primal_residual}};
}

SolveStats stats_from(const json& j) {
  SolveStats s;
  s.lp_solves = j.at("lp_solves").get<long>();
  s.simplex_iterations = j.at("simplex_iterations").get<long>();
  s.worst_duality_gap = j.at("worst_duality_gap").get<double>();
  s.worst_primal_residual = j.at("worst_primal_residual").get<double>();
  return s;
}

ordered_json dispatch_json(const DispatchResult& d) {
  ordered_json j = {{"mode", to_string(d.mode)},
                    {"increment", d.increment},
                    {"status", lp::to_string(d.status)},
                    {"message", d.message},
                    {"exact", d.exact},
                    {"stats", stats_json(d.stats)}};
  j["intervals"] = ordered_json::array();
  for (const auto& iv : d.intervals) {
    j["intervals"].push_back({{"generation", iv.generation},
                              {"consumption", iv.consumption},
                              {"flows", iv.flows},
                              {"prices", iv.prices},
                              {"price_low", iv.price_low},
                              {"price_high", iv.price_high},
                              {"balance_dual", iv.balance_dual},
                              {"line_dual_min", iv.line_dual_min},
                              {"line_dual_max", iv.line_dual_max},
                              {"utility", iv.welfare.utility},
                              {"cost", iv.welfare.cost},
                              {"damage", iv.welfare.damage},
                              {"social_welfare", iv.welfare.social_welfare}});
  }
  return j;
}

DispatchResult dispatch_from(const json& j) {
  DispatchResult d;
  const auto mode = market_mode_from_string(j.at("mode").get<std::string>());
  if (!mode) throw std::runtime_error("unknown market mode in bundle");
  d.mode = *mode;
  d.increment = j.at("increment").get<std::vector<double>>();
  d.status = status_from_string(j.at("status").get<std::string>());
  d.message = j.at("message").get<std::string>();
  d.exact = j.at("exact").get<bool>();
  d.stats = stats_from(j.at("stats"));
  for (const auto& v : j.at("intervals")) {
    IntervalDispatch iv;
    iv.generation = v.at("generation").get<std::vector<double>>();
    iv.consumption = v.at("consumption").get<std::vector<double>>();
    iv.flows = v.at("flows").get<std::vector<double>>();
    iv.prices = v.at("prices").get<std::vector<double>>();
    iv.price_low = v.at("price_low").get<std::vector<double>>();
    iv.price_high = v.at("price_high").get<std::vector<double>>();
    iv.balance_dual = v.at("balance_dual").get<double>();
    iv.line_dual_min = v.at("line_dual_min").get<std::vector<double>>();
    iv.line_dual_max = v.at("line_dual_max").get<std::vector<double>>();
    iv.welfare = {v.at("utility").get<double>(), v.at("cost").get<double>(), v.at("damage").get<double>(),
                  v.at("social_welfare").get<double>()};
    d.intervals.push_back(std::move(iv));
  }
  return d;
}

ordered_json producer_interval_json(const ProducerInterval& p) {
  return {{"output", p.output},
          {"emissions", p.emissions},
          {"revenue", p.revenue},
          {"cost", p.cost},
          {"tax", p.tax},
          {"subsidy", p.subsidy},
          {"fixed_tax", p.fixed_tax},
          {"fixed_subsidy", p.fixed_subsidy},
          {"profit_competitive", p.profit_competitive},
          {"profit_taxed", p.profit_taxed},
          {"profit_full", p.profit_full},
          {"profit_full_direct", p.profit_full_direct},
          {"lines_relaxed", p.lines_relaxed}};
}

ProducerInterval producer_interval_from(const json& j) {
  ProducerInterval p;
  p.output = j.at("output").get<double>();
  p.emissions = j.at("emissions").get<double>();
  p.revenue = j.at("revenue").get<double>();
  p.cost = j.at("cost").get<double>();
  p.tax = j.at("tax").get<double>();
  p.subsidy = j.at("subsidy").get<double>();
  p.fixed_tax = j.at("fixed_tax").get<double>();
  p.fixed_subsidy = j.at("fixed_subsidy").get<double>();
  p.profit_competitive = j.at("profit_competitive").get<double>();
  p.profit_taxed = j.at("profit_taxed").get<double>();
  p.profit_full = j.at("profit_full").get<double>();
  p.profit_full_direct = j.at("profit_full_direct").get<double>();
  p.lines_relaxed = j.at("lines_relaxed").get<bool>();
  return p;
}

ordered_json investment_json(const InvestmentRun& run) {
  const auto& r = run.result;
  return {{"label", run.label},
          {"status", lp::to_string(r.status)},
          {"method", r.method},
          {"message", r.message},
          {"warnings", r.warnings},
          {"increment", r.increment},
          {"tau", r.tau},
          {"welfare", r.welfare},
          {"investment_cost", r.investment_cost},
          {"net_welfare", r.net_welfare},
          {"producer_profit", r.producer_profit},
          {"kkt_residual", r.kkt_residual},
          {"iterations", r.iterations},
          {"stats", stats_json(r.stats)},
          {"dispatch", dispatch_json(r.dispatch)}};
}

InvestmentRun investment_from(const json& j) {
  InvestmentRun run;
  run.label = j.at("label").get<std::string>();
  auto& r = run.result;
  r.status = status_from_string(j.at("status").get<std::string>());
  r.method = j.at("method").get<std::string>();
  r.message = j.at("message").get<std::string>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.increment = j.at("increment").get<std::vector<double>>();
  r.tau = j.at("tau").get<std::vector<double>>();
  r.welfare = j.at("welfare").get<double>();
  r.investment_cost = j.at("investment_cost").get<double>();
  r.net_welfare = j.at("net_welfare").get<double>();
  r.producer_profit = j.at("producer_profit").get<std::vector<double>>();
  r.kkt_residual = j.at("kkt_residual").get<double>();
  r.iterations = j.at("iterations").get<long>();
  r.stats = stats_from(j.at("stats"));
  r.dispatch = dispatch_from(j.at("dispatch"));
  return run;
}

ordered_json summary_json(const ResultBundle& b) {
  const auto& c = b.scenario;
  ordered_json s;
  s["case"] = c.name;
  s["horizon"] = c.horizon();
  s["spot"] = ordered_json::array();
  for (const auto& d : b.dispatches) {
    ordered_json avg = ordered_json::array();
    for (const auto& iv : d.intervals) avg.push_back(average_price(iv));
    s["spot"].push_back({{"mode", to_string(d.mode)},
                         {"status", lp::to_string(d.status)},
                         {"social_welfare", d.total_social_welfare()},
                         {"average_price", avg}});
  }
  if (b.incentives) {
    const auto& r = *b.incentives;
    double tax = 0.0, subsidy = 0.0;
    for (const auto& row : r.intervals) {
      for (const auto& p : row) {
        tax += p.tax;
        subsidy += p.subsidy;
      }
    }
    ordered_json producers = ordered_json::array();
    for (std::size_t i = 0; i < c.producers.size(); ++i) {
      producers.push_back({{"producer", c.producers[i].id},
                           {"profit_competitive", r.horizon_profit(i, ProfitRegime::competitive)},
                           {"profit_taxed", r.horizon_profit(i, ProfitRegime::taxed)},
                           {"profit_full", r.horizon_profit(i, ProfitRegime::full_scheme)}});
    }
    s["incentives"] = {{"total_tax", tax},
                       {"total_subsidy", subsidy},
                       {"net_transfer", r.net_transfer},
                       {"producers", producers}};
  }
  s["investment"] = ordered_json::array();
  for (const auto& run : b.investments) {
    const auto& r = run.result;
    ordered_json inc = ordered_json::object();
    for (std::size_t g = 0; g < r.increment.size() && g < c.generators.size(); ++g) {
      // Every unit that may invest, so a zero increment is visible.
      if (r.increment[g] != 0.0 || c.generators[g].investment_cap > 0.0) inc[c.generators[g].id] = r.increment[g];
    }
    s["investment"].push_back({{"run", run.label},
                               {"status", lp::to_string(r.status)},
                               {"method", r.method},
                               {"total_mw", r.total_mw()},
                               {"increment", inc},
                               {"welfare", r.welfare},
                               {"investment_cost", r.investment_cost},
                               {"net_welfare", r.net_welfare},
                               {"producer_profit", r.producer_profit},
                               {"warnings", r.warnings}});
  }
  s["notes"] = b.notes;
  ordered_json meta = {{"command", b.metadata.command}};
  ordered_json opts = ordered_json::object();
  for (const auto& [k, v] : b.metadata.options) opts[k] = v;
  meta["options"] = opts;
  ordered_json tim = ordered_json::object();
  for (const auto& [k, v] : b.metadata.timings) tim[k] = v;
  meta["timings_s"] = tim;
  meta["solver"] = stats_json(b.metadata.stats);
  const auto& st = c.settings;
  meta["settings"] = {{"gamma", st.gamma},
                      {"feasibility_tol", st.feasibility_tol},
                      {"gap_tol", st.gap_tol},
                      {"price_rule", to_string(st.price_rule)}};
  s["metadata"] = meta;
  return s;
}

}  // namespace

void emit_results(const ResultBundle& b, const std::string& dir_name) {
  const fs::path dir(dir_name);
  fs::create_directories(dir / "series");
  const auto& c = b.scenario;

  {
    Csv spot(dir / "spot.csv", std::string("mode,") + kSpotHeader);
    Csv gen(dir / "generation.csv", "run,t,generator,producer,bus,output");
    Csv con(dir / "consumption.csv", "run,t,demand,bus,consumption");
    Csv pr(dir / "prices.csv", "run,t,bus,price,price_low,price_high");
    Csv fl(dir / "flows.csv", "run,t,line,flow,rating");
    Csv ispot(dir / "invest_spot.csv", std::string("run,") + kSpotHeader);
    for (const auto& d : b.dispatches) {
      spot_rows(spot, to_string(d.mode), d);
      detail_rows(gen, con, pr, fl, c, to_string(d.mode), d);
    }
    for (const auto& run : b.investments) {
      spot_rows(ispot, "invest-" + run.label, run.result.dispatch);
      detail_rows(gen, con, pr, fl, c, "invest-" + run.label, run.result.dispatch);
    }
  }
  {
    Csv inc(dir / "incentives.csv",
            "t,producer,output,emissions,revenue,cost,tax,subsidy,fixed_tax,fixed_subsidy,profit_competitive,"
            "profit_taxed,profit_full,profit_full_direct,lines_relaxed");
    if (b.incentives) {
      const auto& r = *b.incentives;
      for (std::size_t t = 0; t < r.intervals.size(); ++t) {
        for (std::size_t i = 0; i < r.intervals[t].size(); ++i) {
          const auto& p = r.intervals[t][i];
          inc.row(static_cast<int>(t + 1), c.producers[i].id, p.output, p.emissions, p.revenue, p.cost, p.tax,
                  p.subsidy, p.fixed_tax, p.fixed_subsidy, p.profit_competitive, p.profit_taxed, p.profit_full,
                  p.profit_full_direct, p.lines_relaxed);
        }
      }
    }
  }
  {
    Csv inv(dir / "investment.csv", "run,generator,producer,increment,tau");
    for (const auto& run : b.investments) {
      const auto& r = run.result;
      for (std::size_t g = 0; g < r.increment.size(); ++g) {
        inv.row(run.label, c.generators[g].id, c.generators[g].producer, r.increment[g],
                g < r.tau.size() ? r.tau[g] : 0.0);
      }
    }
  }

  // Trajectories.
  auto sw_and_price = [&](const std::string& tag, const DispatchResult& d) {
    std::vector<double> price, sw;
    for (const auto& iv : d.intervals) {
      price.push_back(average_price(iv));
      sw.push_back(iv.welfare.social_welfare);
    }
    write_series(dir / "series" / ("average_price_" + tag + ".dat"), price);
    write_series(dir / "series" / ("social_welfare_" + tag + ".dat"), sw);
  };
  for (const auto& d : b.dispatches) sw_and_price(to_string(d.mode), d);
  for (const auto& run : b.investments) {
    const std::string tag = "invest_" + safe(run.label);
    sw_and_price(tag, run.result.dispatch);
    if (!run.result.ok()) continue;
    for (std::size_t i = 0; i < c.producers.size(); ++i) {
      std::vector<double> p;
      for (int t = 0; t < static_cast<int>(run.result.dispatch.intervals.size()); ++t) {
        p.push_back(interval_taxed_profit(c, t, run.result.dispatch.intervals[t], static_cast<int>(i)));
      }
      write_series(dir / "series" / ("profit_taxed_" + tag + "_" + safe(c.producers[i].id) + ".dat"), p);
    }
  }
  if (b.incentives) {
    const auto& r = *b.incentives;
    std::vector<double> tax, subsidy;
    for (const auto& row : r.intervals) {
      double x = 0.0, s = 0.0;
      for (const auto& p : row) {
        x += p.tax;
        s += p.subsidy;
      }
      tax.push_back(x);
      subsidy.push_back(s);
    }
    write_series(dir / "series" / "tax.dat", tax);
    write_series(dir / "series" / "subsidy.dat", subsidy);
    for (std::size_t i = 0; i < c.producers.size(); ++i) {
      std::vector<double> taxed, full;
      for (std::size_t t = 0; t < r.intervals.size(); ++t) {
        taxed.push_back(r.profit(t, i, ProfitRegime::taxed));
        full.push_back(r.profit(t, i, ProfitRegime::full_scheme));
      }
      write_series(dir / "series" / ("profit_taxed_" + safe(c.producers[i].id) + ".dat"), taxed);
      write_series(dir / "series" / ("profit_full_" + safe(c.producers[i].id) + ".dat"), full);
    }
  }

  std::ofstream summary(dir / "summary.json");
  summary << summary_json(b).dump(2) << '\n';
  std::ofstream bundle(dir / "bundle.json");
  bundle << bundle_to_string(b);
  if (!summary || !bundle) throw std::runtime_error("cannot write summary or bundle in " + dir.string());
}

std::string bundle_to_string(const ResultBundle& b) {
  ordered_json j;
  j["bundle_version"] = 1;
  j["scenario"] = detail::case_to_json(b.scenario);
  j["dispatches"] = ordered_json::array();
  for (const auto& d : b.dispatches) j["dispatches"].push_back(dispatch_json(d));
  if (b.incentives) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : b.incentives->intervals) {
      ordered_json r = ordered_json::array();
      for (const auto& p : row) r.push_back(producer_interval_json(p));
      rows.push_back(r);
    }
    j["incentives"] = {{"intervals", rows}, {"net_transfer", b.incentives->net_transfer}};
  }
  j["investments"] = ordered_json::array();
  for (const auto& run : b.investments) j["investments"].push_back(investment_json(run));
  j["notes"] = b.notes;
  ordered_json opts = ordered_json::array();
  for (const auto& [k, v] : b.metadata.options) opts.push_back({k, v});
  ordered_json tim = ordered_json::array();
  for (const auto& [k, v] : b.metadata.timings) tim.push_back({k, v});
  j["metadata"] = {{"command", b.metadata.command},
                   {"options", opts},
                   {"timings", tim},
                   {"stats", stats_json(b.metadata.stats)}};
  return j.dump(1) + "\n";
}

ResultBundle bundle_from_string(const std::string& text) {
  ResultBundle b;
  try {
    const json j = json::parse(text);
    if (j.at("bundle_version").get<int>() != 1) throw std::runtime_error("unsupported bundle version");
    b.scenario = detail::case_from_json(j.at("scenario"));
    for (const auto& d : j.at("dispatches")) b.dispatches.push_back(dispatch_from(d));
    if (j.contains("incentives")) {
      IncentiveReport r;
      for (const auto& row : j.at("incentives").at("intervals")) {
        std::vector<ProducerInterval> v;
        for (const auto& p : row) v.push_back(producer_interval_from(p));
        r.intervals.push_back(std::move(v));
      }
      r.net_transfer = j.at("incentives").at("net_transfer").get<std::vector<double>>();
      b.incentives = std::move(r);
    }
    for (const auto& run : j.at("investments")) b.investments.push_back(investment_from(run));
    b.notes = j.at("notes").get<std::vector<std::string>>();
    const auto& m = j.at("metadata");
    b.metadata.command = m.at("command").get<std::string>();
    for (const auto& kv : m.at("options")) b.metadata.options.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    for (const auto& kv : m.at("timings")) b.metadata.timings.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<double>());
    b.metadata.stats = stats_from(m.at("stats"));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed result bundle: ") + e.what());
  }
  return b;
}

ResultBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return bundle_from_string(ss.str());
}

}  // namespace elmarket
