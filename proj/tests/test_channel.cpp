#include "doctest.h"

#include "mcvd/channel.hpp"
#include "mcvd/special_functions.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

using namespace mcvd;

namespace {

const double kLambda16 = std::numbers::ln2 / 0.016;

ChannelSpec table2(double lambda = 0.0) { return {10.0, 14.0, 79.4, lambda}; }

// Independent route to the CDF: adaptive Gauss-Kronrod over the density,
// split at the peak so the sharp rise is resolved.
double integrate_rate(const ChannelSpec& spec, double t) {
  auto f = [&](double u) { return u <= 0.0 ? 0.0 : hitting_rate(spec, u); };
  const double tp = peak_time(spec);
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  if (t <= tp) return GK::integrate(f, 0.0, t, 15, 1e-14);
  return GK::integrate(f, 0.0, tp, 15, 1e-14) + GK::integrate(f, tp, t, 15, 1e-14);
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return v;
}

}  // namespace

TEST_CASE("erfcx against high-precision values") {
  // mpmath exp(x^2) erfc(x) at 40 digits
  const std::vector<std::pair<double, double>> ref = {
      {0.1, 0.8964569799691266419}, {1.0, 0.4275835761558070044}, {3.0, 0.1790011511813899504},
      {4.9, 0.1128790905597587552}, {5.0, 0.1107046377330686264}, {5.1, 0.1086110263139327945},
      {10.0, 0.0561409927438225859}, {30.0, 0.0187958888614167515}, {100.0, 0.0056416137829894329}};
  for (auto [x, want] : ref) {
    CHECK(erfcx(x) == doctest::Approx(want).epsilon(1e-13));
  }
  CHECK(erfcx(-1.0) == doctest::Approx(2.0 * std::exp(1.0) - 0.4275835761558070044).epsilon(1e-13));
  CHECK(exp_times_erfc(1500.0, 40.0) == doctest::Approx(erfcx(40.0) * std::exp(1500.0 - 1600.0)));
}

TEST_CASE("degradation rate from half-life") {
  CHECK(degradation_rate_from_half_life(HalfLife::infinite()) == 0.0);
  CHECK(degradation_rate_from_half_life(HalfLife::seconds(0.016)) ==
        doctest::Approx(43.32169878499658).epsilon(1e-14));
  CHECK(degradation_rate_from_half_life(HalfLife::seconds(std::numbers::ln2)) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(HalfLife::seconds(0.0), std::domain_error);
  CHECK_THROWS_AS(HalfLife::seconds(-1.0), std::domain_error);
}

TEST_CASE("channel spec validation") {
  CHECK_NOTHROW(table2().validate());
  CHECK_THROWS_AS((ChannelSpec{10.0, 10.0, 79.4, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ChannelSpec{0.0, 4.0, 79.4, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ChannelSpec{10.0, 14.0, -1.0, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ChannelSpec{10.0, 14.0, 79.4, -0.1}.validate()), std::invalid_argument);
  CHECK(ChannelSpec::from_distance(10.0, 4.0, 79.4, 0.0).tx_center_distance == 14.0);
}

TEST_CASE("hitting rate") {
  const double tp0 = 16.0 / (6.0 * 79.4);
  CHECK(hitting_rate(table2(), tp0) == doctest::Approx(3.279085228505164).epsilon(1e-12));
  CHECK(hitting_rate(table2(kLambda16), 0.033585) ==
        doctest::Approx(0.76537087097108).epsilon(1e-10));
  CHECK(hitting_rate(table2(), 1e-9) == 0.0);
  CHECK_THROWS_AS(hitting_rate(table2(), 0.0), std::domain_error);
  CHECK_THROWS_AS(hitting_rate(table2(), -1.0), std::domain_error);

  SUBCASE("degradation factorizes out") {
    for (double lambda : {0.67, 5.4, 43.3, 693.0}) {
      for (double t : logspace(1e-3, 2.0, 25)) {
        const double plain = hitting_rate(table2(), t);
        CHECK(hitting_rate(table2(lambda), t) ==
              doctest::Approx(plain * std::exp(-lambda * t)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("hitting fraction totals") {
  CHECK(hitting_fraction_total(table2()) == 10.0 / 14.0);
  CHECK(hitting_fraction_total(table2(kLambda16)) ==
        doctest::Approx(0.0372129673979358).epsilon(1e-12));
  CHECK(hitting_fraction_total(table2(1e12)) < 1e-300);
}

TEST_CASE("hitting fraction") {
  CHECK(hitting_fraction(table2(), 0.2) == doctest::Approx(0.3413176009877640).epsilon(1e-13));
  CHECK(hitting_fraction(table2(), 0.1) == doctest::Approx(0.2253492117158647).epsilon(1e-13));
  CHECK(hitting_fraction(table2(kLambda16), 0.0) == 0.0);
  CHECK(hitting_fraction(table2(kLambda16), 1e4) ==
        doctest::Approx(hitting_fraction_total(table2(kLambda16))).epsilon(1e-14));
  CHECK(hitting_fraction(table2(kLambda16), std::numeric_limits<double>::infinity()) ==
        hitting_fraction_total(table2(kLambda16)));
  CHECK_THROWS_AS(hitting_fraction(table2(), -1e-3), std::domain_error);

  SUBCASE("lambda = 0 is the erfc form exactly") {
    for (double t : logspace(1e-4, 100.0, 40)) {
      const double erfc_form = 10.0 / 14.0 * boost::math::erfc(4.0 / std::sqrt(4 * 79.4 * t));
      CHECK(hitting_fraction(table2(), t) == doctest::Approx(erfc_form).epsilon(1e-12));
      CHECK(std::abs(hitting_fraction(table2(1e-9), t) - erfc_form) < 1e-6);
    }
  }

  SUBCASE("matches quadrature of the density") {
    for (double d : {2.0, 4.0, 10.0}) {
      for (double lambda : {0.0, 5.4, 43.3}) {
        const ChannelSpec spec = ChannelSpec::from_distance(10.0, d, 79.4, lambda);
        for (double T : {0.01, 0.1, 1.0}) {
          CHECK(std::abs(hitting_fraction(spec, T) - integrate_rate(spec, T)) < 1e-6);
        }
      }
    }
  }

  SUBCASE("monotone in t, nonincreasing in lambda") {
    const std::vector<double> lambdas = {0.0, 0.67, 5.4, 43.3, 693.0};
    const auto ts = logspace(1e-4, 10.0, 50);
    for (double lambda : lambdas) {
      double prev = 0.0;
      for (double t : ts) {
        const double f = hitting_fraction(table2(lambda), t);
        CHECK(f >= prev);
        prev = f;
      }
    }
    for (double t : ts) {
      for (std::size_t i = 1; i < lambdas.size(); ++i) {
        CHECK(hitting_fraction(table2(lambdas[i]), t) <= hitting_fraction(table2(lambdas[i - 1]), t));
      }
    }
  }

  SUBCASE("no overflow for strong degradation") {
    const ChannelSpec spec = ChannelSpec::from_distance(10.0, 50.0, 79.4, std::numbers::ln2 / 0.0005);
    for (double t : logspace(1e-4, 10.0, 30)) {
      const double f = hitting_fraction(spec, t);
      CHECK(std::isfinite(f));
      CHECK(f >= 0.0);
      CHECK(f <= hitting_fraction_total(spec) * (1 + 1e-12) + 1e-300);
    }
  }
}

TEST_CASE("channel response and expected arrivals") {
  const ChannelSpec spec = table2(kLambda16);
  CHECK(channel_response(spec, 0.0, std::numeric_limits<double>::infinity()) ==
        hitting_fraction_total(spec));
  CHECK(channel_response(spec, 0.01, 0.05) + channel_response(spec, 0.05, 0.2) ==
        doctest::Approx(channel_response(spec, 0.01, 0.2)).epsilon(1e-13));
  CHECK(channel_response(table2(), 0.033, 0.034) == doctest::Approx(3.278885767875089e-3).epsilon(1e-10));
  CHECK_THROWS_AS(channel_response(spec, 0.1, 0.1), std::domain_error);
  CHECK_THROWS_AS(channel_response(spec, 0.2, 0.1), std::domain_error);

  CHECK(expected_arrivals(0.0, spec, 0.0, 1.0) == 0.0);
  CHECK(expected_arrivals(1e5, table2(), 0.033, 0.034) == doctest::Approx(327.8885767875089).epsilon(1e-10));
  CHECK(expected_arrivals(1000.0, table2(), 0.0, std::numeric_limits<double>::infinity()) ==
        doctest::Approx(714.2857142857143));
}

TEST_CASE("peak time") {
  CHECK(peak_time(table2()) == doctest::Approx(16.0 / (6.0 * 79.4)).epsilon(1e-15));
  CHECK(peak_time(table2(kLambda16)) == doctest::Approx(0.02093154461645964).epsilon(1e-13));
  CHECK(peak_time(table2(1e-6)) == doctest::Approx(16.0 / (6.0 * 79.4)).epsilon(1e-9));

  // printed form (sqrt(36D^2 + 16Dd^2 lambda) - 6D) / (8 D lambda), fine for moderate lambda
  const double D = 79.4, d = 4.0;
  const double printed = (std::sqrt(36 * D * D + 16 * D * d * d * kLambda16) - 6 * D) / (8 * D * kLambda16);
  CHECK(peak_time(table2(kLambda16)) == doctest::Approx(printed).epsilon(1e-12));

  SUBCASE("zeros the derivative and degradation moves it earlier") {
    for (double dist : {1.0, 4.0, 20.0, 50.0}) {
      const double t0 = peak_time(ChannelSpec::from_distance(10.0, dist, 79.4, 0.0));
      for (double lambda : {0.0, 0.67, 5.4, 43.3, 693.0}) {
        const ChannelSpec spec = ChannelSpec::from_distance(10.0, dist, 79.4, lambda);
        const double tp = peak_time(spec);
        const double h = 1e-6 * tp;
        const double slope = (hitting_rate(spec, tp + h) - hitting_rate(spec, tp - h)) / (2 * h);
        // dimensionless: slope * t_peak relative to the peak rate
        CHECK(std::abs(slope) * tp < 1e-6 * hitting_rate(spec, tp));
        if (lambda > 0.0) CHECK(tp < t0);
      }
    }
  }
}

TEST_CASE("peak amplitude") {
  const double closed = 1e-6 * (10.0 / 14.0) * (79.4 / 16.0) * std::exp(-1.5) / std::sqrt(std::numbers::pi / 54.0);
  CHECK(peak_amplitude(table2(), {1e-6}, 1.0) == doctest::Approx(closed).epsilon(1e-12));
  CHECK(peak_amplitude(table2(), {1e-6}, 1.0) == doctest::Approx(3.279085228505164e-6).epsilon(1e-10));
  CHECK(peak_amplitude(table2(), {1e-6}, 0.0) == 0.0);
  CHECK(peak_amplitude(table2(kLambda16), {1e-6}, 1.0) ==
        doctest::Approx(1.086789127150118e-6).epsilon(1e-10));

  // the expanded degraded closed form
  const double D = 79.4, d = 4.0, rr = 10.0, lam = kLambda16;
  const double root = std::sqrt(36 * D * D + 16 * D * d * d * lam) - 6 * D;
  const double tp = root / (8 * D * lam);
  const double expanded = 1e-6 * rr / (rr + d) * d / std::sqrt(4 * std::numbers::pi * D * tp * tp * tp) *
                          std::exp(-2 * lam * d * d / root - root / (8 * D));
  CHECK(peak_amplitude(table2(kLambda16), {1e-6}, 1.0) == doctest::Approx(expanded).epsilon(1e-6));

  CHECK(peak_amplitude(table2(), {1e-6}, 1.0, PeakAmplitudeMode::ExactIntegral) ==
        doctest::Approx(peak_amplitude(table2(), {1e-6}, 1.0)).epsilon(1e-6));
  CHECK_THROWS_AS(peak_amplitude(table2(), {0.0}, 1.0), std::domain_error);
}

TEST_CASE("isi fraction") {
  CHECK(isi_fraction(table2(), 0.0) == 1.0);
  CHECK(isi_fraction(table2(), 0.2) == doctest::Approx(0.5221553586171304).epsilon(1e-13));
  CHECK(isi_fraction(table2(kLambda16), 0.2) < 0.05);
  CHECK(isi_fraction(table2(kLambda16), 0.2) == doctest::Approx(7.424706999376292e-5).epsilon(1e-8));
  CHECK_THROWS_AS(isi_fraction(table2(), -0.1), std::domain_error);

  SUBCASE("agrees with 1 - F(t)/F(inf) and depends only on d") {
    for (double lambda : {0.0, 0.67, 5.4, 43.3, 693.0}) {
      double prev = 1.0;
      for (double t : logspace(1e-4, 10.0, 60)) {
        const ChannelSpec spec = table2(lambda);
        const double direct = isi_fraction(spec, t);
        CHECK(std::abs(direct - (1.0 - hitting_fraction(spec, t) / hitting_fraction_total(spec))) < 1e-10);
        CHECK(direct <= prev + 1e-15);
        CHECK(direct >= 0.0);
        prev = direct;
        const ChannelSpec bigger{30.0, 34.0, 79.4, lambda};
        CHECK(isi_fraction(bigger, t) == doctest::Approx(direct).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("signal shape scaling with distance") {
  auto slope = [](const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxy / sxx;
  };
  std::vector<double> logd, tp0, tp16;
  for (double d = 10.0; d <= 50.0; d += 2.0) {
    logd.push_back(std::log(d));
    tp0.push_back(std::log(peak_time(ChannelSpec::from_distance(10.0, d, 79.4, 0.0))));
    tp16.push_back(std::log(peak_time(ChannelSpec::from_distance(10.0, d, 79.4, kLambda16))));
  }
  CHECK(slope(logd, tp0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(slope(logd, tp16) - 1.0) < 0.1);
}
