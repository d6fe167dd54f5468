#include "elmarket/curve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace elmarket {

namespace {
constexpr double kDomainSlack = 1e-9;

double clamp_to_domain(const PiecewiseLinearCurve& c, double x) {
  const double hi = c.domain_max();
  const double slack = kDomainSlack * (1.0 + std::abs(hi));
  if (std::isnan(x) || x < -slack || x > hi + slack) {
    std::ostringstream os;
    os << "curve argument " << x << " outside domain [0, " << hi << "]";
    throw DomainError(os.str());
  }
  return std::clamp(x, 0.0, hi);
}
}  // namespace

const char* to_string(Curvature c) {
  return c == Curvature::convex_nondecreasing ? "convex" : "concave";
}

PiecewiseLinearCurve::PiecewiseLinearCurve(std::vector<double> breakpoints,
                                           std::vector<double> slopes, Curvature curvature)
    : breakpoints_(std::move(breakpoints)), slopes_(std::move(slopes)), curvature_(curvature) {
  if (breakpoints_.size() != slopes_.size() + 1) {
    throw std::invalid_argument("curve needs exactly one more breakpoint than slopes");
  }
}

PiecewiseLinearCurve PiecewiseLinearCurve::linear(double slope, double domain_max,
                                                  Curvature curvature) {
  return PiecewiseLinearCurve({0.0, domain_max}, {slope}, curvature);
}

std::vector<std::string> PiecewiseLinearCurve::violations() const {
  std::vector<std::string> out;
  if (slopes_.empty()) {
    out.emplace_back("curve has no segments");
    return out;
  }
  if (breakpoints_.front() != 0.0) out.emplace_back("first breakpoint must be 0");
  for (std::size_t k = 0; k + 1 < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k + 1] > breakpoints_[k])) {
      out.emplace_back("breakpoints must be strictly increasing");
      break;
    }
  }
  for (std::size_t k = 0; k < slopes_.size(); ++k) {
    if (!std::isfinite(slopes_[k]) || slopes_[k] < 0.0) {
      out.emplace_back("slopes must be finite and nonnegative");
      break;
    }
  }
  for (std::size_t k = 0; k + 1 < slopes_.size(); ++k) {
    const bool bad = curvature_ == Curvature::convex_nondecreasing ? slopes_[k + 1] < slopes_[k]
                                                                    : slopes_[k + 1] > slopes_[k];
    if (bad) {
      out.emplace_back(curvature_ == Curvature::convex_nondecreasing
                           ? "convex curve slopes must be nondecreasing"
                           : "concave curve slopes must be nonincreasing");
      break;
    }
  }
  return out;
}

double PiecewiseLinearCurve::value(double x) const {
  x = clamp_to_domain(*this, x);
  double v = 0.0;
  for (std::size_t k = 0; k < slopes_.size(); ++k) {
    const double lo = breakpoints_[k];
    if (x <= lo) break;
    v += slopes_[k] * (std::min(x, breakpoints_[k + 1]) - lo);
  }
  return v;
}

double PiecewiseLinearCurve::marginal(double x) const {
  x = clamp_to_domain(*this, x);
  for (std::size_t k = 0; k < slopes_.size(); ++k) {
    if (x < breakpoints_[k + 1]) return slopes_[k];
  }
  return slopes_.back();
}

PiecewiseLinearCurve PiecewiseLinearCurve::scaled_slopes(double factor) const {
  std::vector<double> s = slopes_;
  for (double& v : s) v *= factor;
  return {breakpoints_, std::move(s), curvature_};
}

PiecewiseLinearCurve PiecewiseLinearCurve::scaled_domain(double factor) const {
  std::vector<double> b = breakpoints_;
  for (double& v : b) v *= factor;
  return {std::move(b), slopes_, curvature_};
}

double curve_value(const PiecewiseLinearCurve& curve, double x) { return curve.value(x); }
double curve_marginal(const PiecewiseLinearCurve& curve, double x) { return curve.marginal(x); }

PiecewiseLinearCurve pwl_from_quadratic(double linear, double quadratic, double domain_max,
                                        int n_segments, Curvature curvature) {
  if (n_segments < 1) throw std::invalid_argument("n_segments must be at least 1");
  if (!(domain_max > 0.0)) throw std::invalid_argument("domain_max must be positive");
  std::vector<double> b(static_cast<std::size_t>(n_segments) + 1);
  for (int k = 0; k <= n_segments; ++k) b[k] = domain_max * k / n_segments;
  b.back() = domain_max;
  return pwl_from_quadratic(linear, quadratic, b, curvature);
}

PiecewiseLinearCurve pwl_from_quadratic(double linear, double quadratic,
                                        const std::vector<double>& breakpoints,
                                        Curvature curvature) {
  if (breakpoints.size() < 2 || breakpoints.front() != 0.0) {
    throw std::invalid_argument("breakpoints must start at 0 and span one segment or more");
  }
  std::vector<double> slopes;
  slopes.reserve(breakpoints.size() - 1);
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double x0 = breakpoints[k];
    const double x1 = breakpoints[k + 1];
    if (!(x1 > x0)) throw std::invalid_argument("breakpoints must be strictly increasing");
    // Secant of linear*x + quadratic*x^2 over [x0, x1].
    slopes.push_back(linear + quadratic * (x0 + x1));
  }
  PiecewiseLinearCurve curve(breakpoints, std::move(slopes), curvature);
  const auto problems = curve.violations();
  if (!problems.empty()) {
    throw std::invalid_argument("quadratic incompatible with requested curvature: " +
                                problems.front());
  }
  return curve;
}

}  // namespace elmarket
