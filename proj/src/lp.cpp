#include <algorithm>
#include <cmath>

#include "elmarket/lp.hpp"

namespace elmarket::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
    case Status::node_limit: return "node_limit";
  }
  return "unknown";
}

int LinearProgram::add_variable(std::string name, double lower, double upper, double objective) {
  vars_.push_back({std::move(name), lower, upper, objective, false});
  return static_cast<int>(vars_.size()) - 1;
}

int LinearProgram::add_constraint(std::string name, std::vector<Term> terms, Relation relation,
                                  double rhs) {
  rows_.push_back({std::move(name), std::move(terms), relation, rhs});
  return static_cast<int>(rows_.size()) - 1;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
  auto& v = vars_[static_cast<std::size_t>(var)];
  v.lower = lower;
  v.upper = upper;
}

double LinearProgram::evaluate_objective(const std::vector<double>& x) const {
  double v = constant_;
  for (std::size_t j = 0; j < vars_.size(); ++j) v += vars_[j].objective * x[j];
  return v;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    worst = std::max({worst, vars_[j].lower - x[j], x[j] - vars_[j].upper});
  }
  for (const auto& r : rows_) {
    double a = 0.0;
    for (const auto& t : r.terms) a += t.coef * x[static_cast<std::size_t>(t.var)];
    if (r.relation != Relation::greater_equal) worst = std::max(worst, a - r.rhs);
    if (r.relation != Relation::less_equal) worst = std::max(worst, r.rhs - a);
  }
  return worst;
}

std::vector<std::string> LinearProgram::problems() const {
  std::vector<std::string> out;
  for (const auto& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.objective)) {
      out.push_back("variable '" + v.name + "' has NaN bound or non-finite objective");
    } else if (v.lower > v.upper) {
      out.push_back("variable '" + v.name + "' has crossed bounds");
    } else if (v.lower == kInfinity || v.upper == -kInfinity) {
      out.push_back("variable '" + v.name + "' has an infinite bound on the wrong side");
    }
    if (v.binary && (v.lower < 0.0 || v.upper > 1.0)) {
      out.push_back("binary variable '" + v.name + "' has bounds outside [0,1]");
    }
  }
  for (const auto& r : rows_) {
    if (!std::isfinite(r.rhs)) out.push_back("constraint '" + r.name + "' has non-finite rhs");
    for (const auto& t : r.terms) {
      if (t.var < 0 || t.var >= num_variables()) {
        out.push_back("constraint '" + r.name + "' references an undeclared variable");
        break;
      }
      if (!std::isfinite(t.coef)) {
        out.push_back("constraint '" + r.name + "' has a non-finite coefficient");
        break;
      }
    }
  }
  return out;
}

int MixedIntegerProgram::add_binary(std::string name, double objective) {
  const int v = add_variable(std::move(name), 0.0, 1.0, objective);
  vars_[static_cast<std::size_t>(v)].binary = true;
  return v;
}

void MixedIntegerProgram::mark_binary(int var) {
  auto& v = vars_[static_cast<std::size_t>(var)];
  v.binary = true;
  v.lower = std::max(v.lower, 0.0);
  v.upper = std::min(v.upper, 1.0);
}

std::vector<int> MixedIntegerProgram::binary_variables() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    if (vars_[j].binary) out.push_back(static_cast<int>(j));
  }
  return out;
}

}  // namespace elmarket::lp
