#pragma once

#include <cmath>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace elmarket::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Sense { maximize, minimize };
enum class Relation { less_equal, equal, greater_equal };
enum class Status { optimal, infeasible, unbounded, iteration_limit, node_limit };
const char* to_string(Status s);

enum class PricingRule {
  bland,                    // smallest eligible index always
  dantzig_bland_fallback,   // largest reduced cost, Bland after a degenerate streak
};

// One settings record shared by every solve; echoed into each SolveReport.
struct SolverSettings {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  double integrality_tol = 1e-6;
  double gap_tol = 1e-6;  // relative LP duality gap and absolute MILP gap
  PricingRule pricing = PricingRule::dantzig_bland_fallback;
  int degenerate_streak_for_bland = 50;
  long max_iterations = 2'000'000;
  long node_limit = 200'000;
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInfinity;
  double objective = 0.0;
  bool binary = false;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation relation = Relation::less_equal;
  double rhs = 0.0;
};

class LinearProgram {
 public:
  explicit LinearProgram(Sense sense = Sense::maximize) : sense_(sense) {}
  virtual ~LinearProgram() = default;
  LinearProgram(const LinearProgram&) = default;
  LinearProgram& operator=(const LinearProgram&) = default;

  int add_variable(std::string name, double lower, double upper, double objective = 0.0);
  int add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs);

  void set_objective(int var, double coef) { vars_[static_cast<std::size_t>(var)].objective = coef; }
  void add_objective(int var, double coef) { vars_[static_cast<std::size_t>(var)].objective += coef; }
  void set_bounds(int var, double lower, double upper);
  void set_rhs(int row, double rhs) { rows_[static_cast<std::size_t>(row)].rhs = rhs; }
  void set_objective_constant(double c) { constant_ = c; }

  Sense sense() const { return sense_; }
  double objective_constant() const { return constant_; }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const Variable& variable(int v) const { return vars_[static_cast<std::size_t>(v)]; }
  const Constraint& constraint(int r) const { return rows_[static_cast<std::size_t>(r)]; }
  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }

  // Objective value of x including the constant.
  double evaluate_objective(const std::vector<double>& x) const;
  // Largest bound or row violation of x.
  double max_violation(const std::vector<double>& x) const;
  // Well-formedness problems (bad indices, NaN, crossed bounds); empty if fine.
  std::vector<std::string> problems() const;

 protected:
  Sense sense_;
  double constant_ = 0.0;
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
};

class MixedIntegerProgram : public LinearProgram {
 public:
  using LinearProgram::LinearProgram;
  explicit MixedIntegerProgram(const LinearProgram& lp) : LinearProgram(lp) {}

  int add_binary(std::string name, double objective = 0.0);
  void mark_binary(int var);
  bool is_binary(int var) const { return vars_[static_cast<std::size_t>(var)].binary; }
  std::vector<int> binary_variables() const;
};

struct SolveReport {
  Status status = Status::infeasible;
  std::vector<double> primal;
  std::vector<double> duals;          // per constraint: d(objective)/d(rhs); LP only
  std::vector<double> reduced_costs;  // per variable: d(objective)/d(x_j) at fixed basis
  bool has_duals = false;
  double objective = 0.0;
  double dual_objective = 0.0;
  double duality_gap = 0.0;
  double primal_residual = 0.0;
  bool primal_degenerate = false;  // a basic variable sits on a bound (duals may be non-unique)
  long iterations = 0;
  long nodes = 0;
  std::string message;
  SolverSettings settings;

  bool optimal() const { return status == Status::optimal; }
  bool gap_within_tolerance() const {
    return duality_gap <= settings.gap_tol * (1.0 + std::abs(objective));
  }
};

SolveReport solve_lp(const LinearProgram& lp, const SolverSettings& settings = {});

// Process-wide tally of solve_lp calls, branch-and-bound relaxations included.
struct SolveLog {
  long solves = 0;
  long optimal = 0;
  double worst_relative_gap = 0.0;  // duality gap / (1 + |objective|) over optimal solves
  double worst_primal_residual = 0.0;
};
SolveLog solve_log();
void reset_solve_log();

// Proposes binary values from a relaxation; the branch-and-bound verifies them
// by fixing and re-solving, so a bad proposal only costs time.
using IncumbentHeuristic =
    std::function<std::optional<std::vector<double>>(const SolveReport& relaxation)>;

struct MilpOptions {
  IncumbentHeuristic heuristic;
};

SolveReport solve_milp(const MixedIntegerProgram& mip, const SolverSettings& settings = {},
                       const MilpOptions& options = {});

// Fixes every binary at its rounded value from `report` and re-solves the LP.
SolveReport fix_and_price(const MixedIntegerProgram& mip, const SolveReport& report,
                          const SolverSettings& settings = {});

// Extreme value of a linear functional of the constraint duals over the set of
// all dual-optimal solutions, given an optimal primal point. Returns nullopt if
// that face LP is infeasible or unbounded under the given tolerances.
std::optional<double> extreme_dual_value(const LinearProgram& lp,
                                         const std::vector<double>& primal,
                                         const std::vector<Term>& functional, Sense direction,
                                         const SolverSettings& settings = {});

// Plain-text export in CPLEX LP format.
void write_lp_format(const LinearProgram& lp, std::ostream& out, const std::string& title = "");

}  // namespace elmarket::lp
