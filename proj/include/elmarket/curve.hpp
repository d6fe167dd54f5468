#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace elmarket {

enum class Curvature { convex_nondecreasing, concave_nondecreasing };

const char* to_string(Curvature c);

// Raised when a curve is evaluated outside [0, last breakpoint].
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Piecewise-linear function through the origin. Segment k spans
// [breakpoints[k], breakpoints[k+1]] with constant slope slopes[k].
class PiecewiseLinearCurve {
 public:
  PiecewiseLinearCurve() = default;
  // Throws std::invalid_argument when breakpoints.size() != slopes.size() + 1.
  // Semantic invariants are reported by violations(), not enforced here.
  PiecewiseLinearCurve(std::vector<double> breakpoints, std::vector<double> slopes,
                       Curvature curvature);

  static PiecewiseLinearCurve linear(double slope, double domain_max, Curvature curvature);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }
  Curvature curvature() const { return curvature_; }
  std::size_t segment_count() const { return slopes_.size(); }
  double domain_max() const { return breakpoints_.empty() ? 0.0 : breakpoints_.back(); }
  double segment_width(std::size_t k) const { return breakpoints_[k + 1] - breakpoints_[k]; }
  bool empty() const { return slopes_.empty(); }

  // Empty when the curve satisfies every invariant.
  std::vector<std::string> violations() const;

  double value(double x) const;
  double marginal(double x) const;

  // Copy with all slopes multiplied by `factor`.
  PiecewiseLinearCurve scaled_slopes(double factor) const;
  // Copy with all breakpoints multiplied by `factor`.
  PiecewiseLinearCurve scaled_domain(double factor) const;

  bool operator==(const PiecewiseLinearCurve&) const = default;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  Curvature curvature_ = Curvature::convex_nondecreasing;
};

double curve_value(const PiecewiseLinearCurve& curve, double x);
// Right-hand derivative. At the last breakpoint the last slope is returned.
double curve_marginal(const PiecewiseLinearCurve& curve, double x);

// f(x) = linear*x + quadratic*x^2 interpolated at n equal-width segments on
// [0, domain_max]. Throws std::invalid_argument if the secant slopes are not
// compatible with `curvature` (monotone in the right direction and >= 0).
PiecewiseLinearCurve pwl_from_quadratic(double linear, double quadratic, double domain_max,
                                        int n_segments, Curvature curvature);
// Same, with caller-chosen breakpoints (must start at 0).
PiecewiseLinearCurve pwl_from_quadratic(double linear, double quadratic,
                                        const std::vector<double>& breakpoints,
                                        Curvature curvature);

// Exact quadratic utility u(d) = linear*d + quadratic*d^2 (quadratic <= 0).
struct QuadraticUtility {
  double linear = 0.0;
  double quadratic = 0.0;

  double value(double d) const { return linear * d + quadratic * d * d; }
  double marginal(double d) const { return linear + 2.0 * quadratic * d; }
  bool operator==(const QuadraticUtility&) const = default;
};

}  // namespace elmarket
