#include "mcvd/special_functions.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace mcvd {
namespace {

// Below this the direct product exp(x^2) * erfc(x) loses at most ~x^2 ulp.
constexpr double kContinuedFractionCutoff = 5.0;

// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
// evaluated with the modified Lentz algorithm.
double erfcx_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double f = x;
  double c = x;
  double d = 0.0;
  for (int n = 1; n < 500; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::numbers::inv_sqrtpi / f;
}

}  // namespace

double erfcx(double x) {
  if (std::isnan(x)) return x;
  if (x >= kContinuedFractionCutoff) return erfcx_continued_fraction(x);
  if (x >= 0.0) return std::exp(x * x) * boost::math::erfc(x);
  // erfc(-y) = 2 - erfc(y)
  return 2.0 * std::exp(x * x) - erfcx(-x);
}

double exp_times_erfc(double a, double u) {
  if (u < kContinuedFractionCutoff) {
    const double e = boost::math::erfc(u);
    if (a < 700.0) return std::exp(a) * e;
    return std::exp(a + std::log(e));
  }
  return erfcx(u) * std::exp(a - u * u);
}

}  // namespace mcvd
