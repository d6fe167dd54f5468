#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "elmarket/curve.hpp"

#include <cmath>

using namespace elmarket;

TEST_CASE("linear cost curve value and marginal") {
  const auto c = PiecewiseLinearCurve::linear(4.0, 10.0, Curvature::convex_nondecreasing);
  CHECK(curve_value(c, 0.0) == 0.0);
  CHECK(curve_value(c, 3.0) == doctest::Approx(12.0));
  CHECK(curve_marginal(c, 3.0) == 4.0);
  CHECK(c.violations().empty());
}

TEST_CASE("marginal at a breakpoint is the right-hand slope") {
  const PiecewiseLinearCurve c({0, 1, 2, 4}, {1, 2, 5}, Curvature::convex_nondecreasing);
  CHECK(curve_marginal(c, 0.0) == 1.0);
  CHECK(curve_marginal(c, 1.0) == 2.0);
  CHECK(curve_marginal(c, 2.0) == 5.0);
  CHECK(curve_marginal(c, 4.0) == 5.0);
  CHECK(curve_value(c, 4.0) == doctest::Approx(1 + 2 + 10));
}

TEST_CASE("domain errors") {
  const auto c = PiecewiseLinearCurve::linear(1.0, 2.0, Curvature::convex_nondecreasing);
  CHECK_THROWS_AS(curve_value(c, -0.1), DomainError);
  CHECK_THROWS_AS(curve_value(c, 2.1), DomainError);
  CHECK_THROWS_AS(curve_marginal(c, 3.0), DomainError);
  CHECK_THROWS_AS(PiecewiseLinearCurve({0, 1}, {1, 2}, Curvature::convex_nondecreasing),
                  std::invalid_argument);
}

TEST_CASE("pwl_from_quadratic secant slopes") {
  const auto c = pwl_from_quadratic(6.0, -0.5, 6.0, 6, Curvature::concave_nondecreasing);
  const std::vector<double> expected{5.5, 4.5, 3.5, 2.5, 1.5, 0.5};
  REQUIRE(c.slopes().size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) CHECK(c.slopes()[k] == doctest::Approx(expected[k]));

  const auto one = pwl_from_quadratic(6.0, -0.5, 6.0, 1, Curvature::concave_nondecreasing);
  REQUIRE(one.slopes().size() == 1);
  CHECK(one.slopes()[0] == doctest::Approx(3.0));
}

TEST_CASE("pwl_from_quadratic is exact at breakpoints") {
  for (int n : {1, 3, 7, 10, 50, 100}) {
    const auto c = pwl_from_quadratic(12.0, -0.5, 12.0, n, Curvature::concave_nondecreasing);
    for (double x : c.breakpoints()) {
      CHECK(std::abs(curve_value(c, x) - (12.0 * x - 0.5 * x * x)) <= 1e-12 * (1 + 72));
    }
  }
}

TEST_CASE("10-segment utility approximation lies within one segment area") {
  const auto c = pwl_from_quadratic(6.0, -0.5, 6.0, 10, Curvature::concave_nondecreasing);
  const double exact = 6.0 * 2 - 0.5 * 4;
  const double width = 0.6;
  const double area_bound = width * (c.slopes().front() - c.slopes().back());
  CHECK(std::abs(curve_value(c, 2.0) - exact) <= area_bound);
  CHECK(curve_value(c, 2.0) <= exact);
}

TEST_CASE("pwl_from_quadratic rejects incompatible curvature") {
  CHECK_THROWS_AS(pwl_from_quadratic(6.0, -0.5, 6.0, 4, Curvature::convex_nondecreasing),
                  std::invalid_argument);
  // Utility decreasing beyond its peak at d = 6.
  CHECK_THROWS_AS(pwl_from_quadratic(6.0, -0.5, 8.0, 4, Curvature::concave_nondecreasing),
                  std::invalid_argument);
  CHECK_THROWS_AS(pwl_from_quadratic(6.0, -0.5, 6.0, 0, Curvature::concave_nondecreasing),
                  std::invalid_argument);
}

TEST_CASE("monotone marginals") {
  const auto convex = pwl_from_quadratic(2.0, 0.3, 10.0, 10, Curvature::convex_nondecreasing);
  const auto concave = pwl_from_quadratic(20.0, -0.5, 20.0, 13, Curvature::concave_nondecreasing);
  double prev_cv = -1, prev_cc = 1e9;
  for (int i = 0; i <= 200; ++i) {
    const double xv = 10.0 * i / 200, xc = 20.0 * i / 200;
    CHECK(curve_marginal(convex, xv) >= prev_cv);
    CHECK(curve_marginal(concave, xc) <= prev_cc);
    prev_cv = curve_marginal(convex, xv);
    prev_cc = curve_marginal(concave, xc);
  }
}

TEST_CASE("violations are reported, not thrown") {
  const PiecewiseLinearCurve bad({0, 2, 1}, {3, 1}, Curvature::convex_nondecreasing);
  const auto v = bad.violations();
  CHECK(v.size() >= 2);
  const PiecewiseLinearCurve negative({0, 1}, {-1}, Curvature::concave_nondecreasing);
  CHECK_FALSE(negative.violations().empty());
}
