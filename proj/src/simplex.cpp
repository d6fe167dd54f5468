// Dense bounded-variable primal simplex.
//
// Every row i gets a logical variable r_i = a_i x whose bounds encode the
// relation, so the working system is [A -I] (x, r) = 0 with all variables
// boxed. The tableau holds B^-1 [A -I] explicitly. Phase 1 minimizes the sum
// of bound violations of basic variables; phase 2 minimizes the (sign-adjusted)
// objective from that basis.

#include <algorithm>
#include <cmath>
#include <mutex>

#include "elmarket/lp.hpp"

namespace elmarket::lp {

namespace {

class Tableau {
 public:
  Tableau(const LinearProgram& lp, const SolverSettings& s)
      : lp_(lp), s_(s), n_(lp.num_variables()), m_(lp.num_constraints()), cols_(n_ + m_) {
    const double sign = lp.sense() == Sense::maximize ? -1.0 : 1.0;
    lo_.assign(cols_, 0.0);
    up_.assign(cols_, 0.0);
    cost_.assign(cols_, 0.0);
    x_.assign(cols_, 0.0);
    pos_.assign(cols_, -1);
    head_.assign(m_, 0);
    t_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
    for (int j = 0; j < n_; ++j) {
      const auto& v = lp.variable(j);
      lo_[j] = v.lower;
      up_[j] = v.upper;
      cost_[j] = sign * v.objective;
      x_[j] = std::isfinite(v.lower) ? v.lower : (std::isfinite(v.upper) ? v.upper : 0.0);
    }
    for (int i = 0; i < m_; ++i) {
      const auto& r = lp.constraint(i);
      const int col = n_ + i;
      lo_[col] = r.relation == Relation::less_equal ? -kInfinity : r.rhs;
      up_[col] = r.relation == Relation::greater_equal ? kInfinity : r.rhs;
      for (const auto& term : r.terms) at(i, term.var) -= term.coef;
      at(i, col) = 1.0;
      head_[i] = col;
      pos_[col] = i;
    }
    recompute_basics();
  }

  SolveReport run() {
    SolveReport rep;
    rep.settings = s_;
    Status status = iterate();
    rep.status = status;
    rep.iterations = iterations_;
    if (status != Status::optimal) {
      rep.message = status == Status::infeasible ? "primal infeasible"
                    : status == Status::unbounded ? "objective unbounded"
                                                  : "iteration limit reached";
      if (status == Status::unbounded || status == Status::iteration_limit) {
        rep.primal.assign(x_.begin(), x_.begin() + n_);
      }
      return rep;
    }
    finish(rep);
    return rep;
  }

 private:
  double& at(int i, int j) { return t_[static_cast<std::size_t>(i) * cols_ + j]; }
  double at(int i, int j) const { return t_[static_cast<std::size_t>(i) * cols_ + j]; }

  void recompute_basics() {
    for (int i = 0; i < m_; ++i) {
      const double* row = &t_[static_cast<std::size_t>(i) * cols_];
      double v = 0.0;
      for (int j = 0; j < cols_; ++j) {
        if (pos_[j] < 0 && x_[j] != 0.0) v -= row[j] * x_[j];
      }
      x_[head_[i]] = v;
    }
  }

  double infeasibility_tol(double bound) const { return 1e-9 * (1.0 + std::abs(bound)); }

  // Phase-1 gradient of a basic variable: -1 below its lower bound, +1 above
  // its upper bound.
  double phase1_cost(int i) const {
    const int b = head_[i];
    if (x_[b] < lo_[b] - infeasibility_tol(lo_[b])) return -1.0;
    if (x_[b] > up_[b] + infeasibility_tol(up_[b])) return 1.0;
    return 0.0;
  }

  Status iterate() {
    bool phase1 = true;
    bool bland = s_.pricing == PricingRule::bland;
    int degenerate_streak = 0;
    std::vector<double> cb(m_), d(cols_);
    std::vector<double> alpha(m_);
    bool d_current = false;  // phase-2 reduced costs survive bound flips
    for (;;) {
      if (iterations_ >= s_.max_iterations) return Status::iteration_limit;
      if (iterations_ % 64 == 0) recompute_basics();
      if (phase1) d_current = false;

      bool any_infeasible = false;
      if (phase1) {
        for (int i = 0; i < m_; ++i) {
          cb[i] = phase1_cost(i);
          if (cb[i] != 0.0) any_infeasible = true;
        }
        if (!any_infeasible) {
          phase1 = false;
          degenerate_streak = 0;
          bland = s_.pricing == PricingRule::bland;
        }
      }
      if (!phase1) {
        for (int i = 0; i < m_; ++i) cb[i] = cost_[head_[i]];
      }

      if (!d_current) {
        for (int j = 0; j < cols_; ++j) d[j] = phase1 ? 0.0 : cost_[j];
        for (int i = 0; i < m_; ++i) {
          if (cb[i] == 0.0) continue;
          const double* row = &t_[static_cast<std::size_t>(i) * cols_];
          const double c = cb[i];
          for (int j = 0; j < cols_; ++j) d[j] -= c * row[j];
        }
        d_current = !phase1;
      }

      int enter = -1;
      double best = 0.0;
      for (int j = 0; j < cols_; ++j) {
        if (pos_[j] >= 0) continue;
        double score = 0.0;
        if (d[j] < -s_.optimality_tol && x_[j] < up_[j]) score = -d[j];
        else if (d[j] > s_.optimality_tol && x_[j] > lo_[j]) score = d[j];
        if (score <= 0.0) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (score > best) {
          best = score;
          enter = j;
        }
      }
      if (enter < 0) return phase1 ? Status::infeasible : Status::optimal;

      const double dir = d[enter] < 0.0 ? 1.0 : -1.0;
      const double flip_distance = up_[enter] - lo_[enter];
      double theta = kInfinity;
      int leave = -1;
      double leave_value = 0.0;
      double leave_alpha = 0.0;
      for (int i = 0; i < m_; ++i) {
        alpha[i] = -at(i, enter) * dir;
        const double a = alpha[i];
        if (std::abs(a) <= s_.pivot_tol) continue;
        const int b = head_[i];
        const double v = x_[b];
        double ratio = kInfinity;
        double target = 0.0;
        const bool below = phase1 && v < lo_[b] - infeasibility_tol(lo_[b]);
        const bool above = phase1 && v > up_[b] + infeasibility_tol(up_[b]);
        if (below) {
          if (a > 0.0) {
            ratio = (lo_[b] - v) / a;
            target = lo_[b];
          }
        } else if (above) {
          if (a < 0.0) {
            ratio = (v - up_[b]) / -a;
            target = up_[b];
          }
        } else if (a > 0.0 && std::isfinite(up_[b])) {
          ratio = (up_[b] - v) / a;
          target = up_[b];
        } else if (a < 0.0 && std::isfinite(lo_[b])) {
          ratio = (v - lo_[b]) / -a;
          target = lo_[b];
        }
        if (!std::isfinite(ratio)) continue;
        ratio = std::max(ratio, 0.0);
        bool take = false;
        if (leave < 0 || ratio < theta - 1e-12) {
          take = true;
        } else if (ratio <= theta + 1e-12) {
          // Tie: Bland keeps the smallest variable index; otherwise prefer the
          // larger pivot for stability.
          take = bland ? b < head_[leave] : std::abs(a) > std::abs(leave_alpha);
        }
        if (take) {
          theta = leave < 0 ? ratio : std::min(theta, ratio);
          leave = i;
          leave_value = target;
          leave_alpha = a;
        }
      }
      const bool flip = flip_distance <= theta;
      if (flip) theta = flip_distance;
      if (!std::isfinite(theta)) {
        if (phase1) return Status::infeasible;  // not reachable for a consistent tableau
        return Status::unbounded;
      }

      ++iterations_;
      if (theta <= 1e-12) {
        if (++degenerate_streak >= s_.degenerate_streak_for_bland) bland = true;
      } else {
        degenerate_streak = 0;
        if (s_.pricing != PricingRule::bland) bland = false;
      }

      for (int i = 0; i < m_; ++i) {
        if (alpha[i] != 0.0) x_[head_[i]] += alpha[i] * theta;
      }
      if (flip) {
        x_[enter] = dir > 0 ? up_[enter] : lo_[enter];
        continue;
      }
      x_[enter] += dir * theta;
      x_[head_[leave]] = leave_value;
      pivot(leave, enter);
      d_current = false;
    }
  }

  void pivot(int r, int j) {
    double* prow = &t_[static_cast<std::size_t>(r) * cols_];
    const double inv = 1.0 / prow[j];
    for (int k = 0; k < cols_; ++k) prow[k] *= inv;
    prow[j] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &t_[static_cast<std::size_t>(i) * cols_];
      const double f = row[j];
      if (f == 0.0) continue;
      for (int k = 0; k < cols_; ++k) row[k] -= f * prow[k];
      row[j] = 0.0;
    }
    const int out = head_[r];
    pos_[out] = -1;
    head_[r] = j;
    pos_[j] = r;
  }

  void finish(SolveReport& rep) {
    recompute_basics();
    const double sign = lp_.sense() == Sense::maximize ? -1.0 : 1.0;
    rep.primal.assign(x_.begin(), x_.begin() + n_);
    // Snap nonbasic structurals exactly onto their bounds (they already are)
    // and clip basic values that drifted within tolerance.
    for (int j = 0; j < n_; ++j) {
      if (pos_[j] >= 0) rep.primal[j] = std::clamp(rep.primal[j], lo_[j], up_[j]);
    }

    // Min-form duals: y_i equals the reduced cost of logical i.
    std::vector<double> y(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      double v = 0.0;
      for (int k = 0; k < m_; ++k) v -= cost_[head_[k]] * at(k, n_ + i);
      y[i] = v;
    }
    rep.duals.resize(m_);
    for (int i = 0; i < m_; ++i) rep.duals[i] = sign * y[i];
    rep.has_duals = true;

    // Fresh reduced costs from y, used both for reporting and the dual bound.
    std::vector<double> z(cost_.begin(), cost_.begin() + n_);
    for (int i = 0; i < m_; ++i) {
      for (const auto& term : lp_.constraint(i).terms) z[term.var] -= term.coef * y[i];
    }
    rep.reduced_costs.resize(n_);
    for (int j = 0; j < n_; ++j) rep.reduced_costs[j] = sign * z[j];

    auto bound_term = [&](double zj, double lo, double up, bool& infeasible) {
      if (zj > 0.0) {
        if (std::isfinite(lo)) return zj * lo;
        if (zj > 1e-7) infeasible = true;
        return 0.0;
      }
      if (zj < 0.0) {
        if (std::isfinite(up)) return zj * up;
        if (zj < -1e-7) infeasible = true;
        return 0.0;
      }
      return 0.0;
    };
    bool dual_infeasible = false;
    double dual_min = 0.0;
    for (int j = 0; j < n_; ++j) dual_min += bound_term(z[j], lo_[j], up_[j], dual_infeasible);
    for (int i = 0; i < m_; ++i) {
      dual_min += bound_term(y[i], lo_[n_ + i], up_[n_ + i], dual_infeasible);
    }
    rep.objective = lp_.evaluate_objective(rep.primal);
    rep.dual_objective = sign * dual_min + lp_.objective_constant();
    rep.duality_gap = dual_infeasible ? kInfinity : std::abs(rep.objective - rep.dual_objective);
    rep.primal_residual = std::max(0.0, lp_.max_violation(rep.primal));

    for (int i = 0; i < m_ && !rep.primal_degenerate; ++i) {
      const int b = head_[i];
      const double v = x_[b];
      if (std::abs(v - lo_[b]) <= 1e-9 * (1.0 + std::abs(lo_[b])) ||
          std::abs(v - up_[b]) <= 1e-9 * (1.0 + std::abs(up_[b]))) {
        rep.primal_degenerate = true;
      }
    }
    if (dual_infeasible) rep.message = "reduced costs violate dual feasibility beyond 1e-7";
  }

  const LinearProgram& lp_;
  SolverSettings s_;
  int n_, m_, cols_;
  std::vector<double> lo_, up_, cost_, x_;
  std::vector<int> pos_, head_;
  std::vector<double> t_;
  long iterations_ = 0;
};

std::mutex log_mutex;
SolveLog log_state;

void record_solve(const SolveReport& r) {
  std::lock_guard lock(log_mutex);
  ++log_state.solves;
  if (!r.optimal()) return;
  ++log_state.optimal;
  log_state.worst_relative_gap =
      std::max(log_state.worst_relative_gap, r.duality_gap / (1.0 + std::abs(r.objective)));
  log_state.worst_primal_residual = std::max(log_state.worst_primal_residual, r.primal_residual);
}

}  // namespace

SolveReport solve_lp(const LinearProgram& lp, const SolverSettings& settings) {
  const auto problems = lp.problems();
  if (!problems.empty()) {
    SolveReport rep;
    rep.settings = settings;
    rep.status = Status::infeasible;
    rep.message = "malformed program: " + problems.front();
    return rep;
  }
  Tableau tableau(lp, settings);
  SolveReport rep = tableau.run();
  record_solve(rep);
  return rep;
}

SolveLog solve_log() {
  std::lock_guard lock(log_mutex);
  return log_state;
}

void reset_solve_log() {
  std::lock_guard lock(log_mutex);
  log_state = {};
}

}  // namespace elmarket::lp
