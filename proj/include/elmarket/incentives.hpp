#pragma once

#include <vector>

#include "elmarket/market.hpp"

namespace elmarket {

enum class ProfitRegime { competitive, taxed, full_scheme };
const char* to_string(ProfitRegime r);

struct ProducerInterval {
  double output = 0.0;     // MW over all units
  double emissions = 0.0;
  double revenue = 0.0;    // sum_n P_tn q_tin
  double cost = 0.0;
  double tax = 0.0;        // variable part phi
  double subsidy = 0.0;    // variable part chi
  double fixed_tax = 0.0;
  double fixed_subsidy = 0.0;
  double profit_competitive = 0.0;  // revenue - cost
  double profit_taxed = 0.0;        // ... - tax - fixed_tax
  double profit_full = 0.0;         // ... + subsidy + fixed_subsidy
  double profit_full_direct = 0.0;  // U(q) - U(q - q_i) - C_i - (E(x) - E(x - x_i)) + fixed fees
  bool lines_relaxed = false;       // counterfactual utility needed relaxed line limits
};

struct IncentiveReport {
  std::vector<std::vector<ProducerInterval>> intervals;  // [t][producer]
  std::vector<double> net_transfer;  // per t: sum_i (chi - phi) incl. fixed fees
  double horizon_profit(std::size_t producer, ProfitRegime regime) const;
  double profit(std::size_t t, std::size_t producer, ProfitRegime regime) const;
};

// phi_ti = sum_n E_n(x_tn) - E_n(x_tn - x_tin); [t][producer].
std::vector<std::vector<double>> pigouvian_tax(const ScenarioCase& c, const DispatchResult& d);

// chi_ti = U_t(q) - U_t(q - q_i) - sum_n P_tn q_tin; [t][producer]. Counterfactual
// utilities keep the line limits; when that is infeasible the limits are
// relaxed with a penalty and `relaxed[t][i]` is set.
std::vector<std::vector<double>> surplus_subsidy(const ScenarioCase& c, const DispatchResult& d,
                                                 std::vector<std::vector<bool>>* relaxed = nullptr);

// Every tax, subsidy and profit term for the dispatch. Throws std::runtime_error
// if a counterfactual utility LP is infeasible even with relaxed lines.
IncentiveReport compute_incentives(const ScenarioCase& c, const DispatchResult& d);

// [t][producer] profit under the regime.
std::vector<std::vector<double>> producer_profit(const ScenarioCase& c, const DispatchResult& d,
                                                 ProfitRegime regime);

// Revenue - cost - Pigouvian tax - fixed tax of producer i in one interval,
// without any counterfactual utility solve.
double interval_taxed_profit(const ScenarioCase& c, int t, const IntervalDispatch& iv, int producer);

struct SchemeChecks {
  std::vector<bool> individually_rational;  // per producer, every interval
  std::vector<double> budget_balance;       // per t, net transfer (no pass/fail)
  double price_independence_residual = 0.0;  // max |full profit, price path - direct path|
};

SchemeChecks scheme_checks(const ScenarioCase& c, const DispatchResult& d,
                           const IncentiveReport& report);

}  // namespace elmarket
