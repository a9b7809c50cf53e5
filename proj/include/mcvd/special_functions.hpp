#pragma once

namespace mcvd {

/// Scaled complementary error function, erfcx(x) = exp(x^2) * erfc(x).
///
/// Accurate to a few ulp-multiples for x >= 0. For negative x the result
/// grows like 2 exp(x^2) and overflows below x ~ -26.6.
double erfcx(double x);

/// exp(a) * erfc(u), evaluated without forming the possibly overflowing
/// exp(a) or the possibly underflowing erfc(u) separately.
double exp_times_erfc(double a, double u);

}  // namespace mcvd
