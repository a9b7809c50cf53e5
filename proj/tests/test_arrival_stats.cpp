#include "doctest.h"

#include "mcvd/arrival_stats.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

using namespace mcvd;

namespace {

// Direct term summation in long double; the oracle for the incomplete-beta route.
double binomial_cdf_by_summation(std::int64_t n, double p, std::int64_t k) {
  long double total = 0.0L;
  for (std::int64_t j = 0; j <= k && j <= n; ++j) {
    const long double log_term = std::lgamma((long double)n + 1) - std::lgamma((long double)j + 1) -
                                 std::lgamma((long double)(n - j) + 1) + j * std::log((long double)p) +
                                 (n - j) * std::log1p(-(long double)p);
    total += std::exp(log_term);
  }
  return static_cast<double>(total);
}

std::vector<double> poisson_pmf(double mu, std::size_t len) {
  std::vector<double> pmf(len);
  pmf[0] = std::exp(-mu);
  for (std::size_t k = 1; k < len; ++k) pmf[k] = pmf[k - 1] * mu / static_cast<double>(k);
  return pmf;
}

}  // namespace

TEST_CASE("count cdf basics") {
  CHECK(count_cdf({CountKind::Binomial, 2, 0.5}, 1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(count_cdf({CountKind::Binomial, 2, 0.5}, -1) == 0.0);
  CHECK(count_cdf({CountKind::Poisson, 1, 1.0}, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(count_cdf({CountKind::Binomial, 10, 0.0}, 0) == 1.0);
  CHECK(count_cdf({CountKind::Binomial, 10, 1.0}, 9) == 0.0);
  CHECK(count_cdf({CountKind::Binomial, 10, 1.0}, 10) == 1.0);
  CHECK(count_cdf({CountKind::Gaussian, 101, 0.5}, 50) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(count_cdf({CountKind::Gaussian, 100, 0.0}, 0) == 1.0);
  CHECK_THROWS_AS(count_cdf({CountKind::Binomial, 10, 1.5}, 3), std::domain_error);
  CHECK_THROWS_AS(count_cdf({CountKind::Poisson, -1, 0.5}, 3), std::domain_error);
  CHECK_THROWS_AS(poisson_cdf(3, -1.0), std::domain_error);
  CHECK(poisson_cdf(0, 0.0) == 1.0);
  CHECK(poisson_cdf(15, 25.0) == doctest::Approx(0.022293021307365195).epsilon(1e-10));
}

TEST_CASE("binomial vs Poisson in the rare-arrival regime") {
  const double binom = count_cdf({CountKind::Binomial, 2000, 0.01}, 20);
  const double pois = count_cdf({CountKind::Poisson, 2000, 0.01}, 20);
  CHECK(std::abs(binom - pois) < 0.012);
}

TEST_CASE("binomial cdf matches direct summation") {
  for (std::int64_t n : {1, 5, 17, 50, 100, 200}) {
    for (double p : {0.001, 0.05, 0.3, 0.5, 0.77, 0.999}) {
      for (std::int64_t k = 0; k <= n; ++k) {
        const double direct = binomial_cdf_by_summation(n, p, k);
        CHECK(std::abs(count_cdf({CountKind::Binomial, n, p}, k) - direct) < 1e-12);
      }
    }
  }
}

TEST_CASE("cdf is nondecreasing and reaches one") {
  for (CountKind kind : {CountKind::Binomial, CountKind::Poisson, CountKind::Gaussian}) {
    for (double p : {0.002, 0.1, 0.44}) {
      const CountModel m{kind, 2000, p};
      double prev = 0.0;
      for (std::int64_t k = -1; k <= 2000; ++k) {
        const double f = count_cdf(m, k);
        CHECK(f >= prev);
        prev = f;
      }
      if (kind == CountKind::Binomial) CHECK(std::abs(count_cdf(m, 2000) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("which approximation is closer depends on the mean") {
  for (std::int64_t n : {1000, 2000, 5000, 10000}) {
    // large mean with non-negligible p: Gaussian closer
    for (double p : {0.1, 0.2, 0.44}) {
      const CountModel b{CountKind::Binomial, n, p};
      CHECK(cdf_distance(b, {CountKind::Gaussian, n, p}) < cdf_distance(b, {CountKind::Poisson, n, p}));
    }
    // mean at most 5: Poisson closer
    for (double mean : {0.5, 1.0, 2.0, 5.0}) {
      const double p = mean / static_cast<double>(n);
      const CountModel b{CountKind::Binomial, n, p};
      CHECK(cdf_distance(b, {CountKind::Poisson, n, p}) < cdf_distance(b, {CountKind::Gaussian, n, p}));
    }
  }
}

TEST_CASE("sum of independent Poisson counts is Poisson") {
  const std::vector<std::vector<double>> cases = {{3.0, 7.5}, {0.2, 19.0, 4.0}, {1.0, 2.0, 3.0, 4.0},
                                                  {20.0, 20.0, 0.5, 11.0}};
  const std::size_t len = 200;  // truncation error far below 1e-9 for total mean <= 80
  for (const auto& means : cases) {
    std::vector<double> conv(len, 0.0);
    conv[0] = 1.0;
    double total = 0.0;
    for (double mu : means) {
      total += mu;
      const auto pmf = poisson_pmf(mu, len);
      std::vector<double> next(len, 0.0);
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; i + j < len; ++j) next[i + j] += conv[i] * pmf[j];
      conv = next;
    }
    double cdf = 0.0;
    for (std::int64_t k = 0; k < 120; ++k) {
      cdf += conv[k];
      CHECK(std::abs(cdf - poisson_cdf(k, total)) < 1e-9);
    }
  }
}

TEST_CASE("ks distance") {
  CHECK_THROWS_AS(ks_distance(std::vector<std::int64_t>{}, {CountKind::Poisson, 10, 1.0}), std::domain_error);

  SUBCASE("degenerate sample") {
    const std::vector<std::int64_t> zeros(50, 0);
    CHECK(ks_distance(zeros, {CountKind::Poisson, 10, 1.0}) == doctest::Approx(1.0 - std::exp(-10.0)));
  }

  SUBCASE("quantile sample converges to the model") {
    const CountModel model{CountKind::Binomial, 2000, 0.0022};
    const std::size_t n = 1'000'000;
    std::vector<double> cdf;
    for (std::int64_t k = 0; k <= 60; ++k) cdf.push_back(count_cdf(model, k));
    std::vector<std::int64_t> sample;
    sample.reserve(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      while (k + 1 < cdf.size() && cdf[k] < u) ++k;
      sample.push_back(static_cast<std::int64_t>(k));
    }
    CHECK(ks_distance(sample, model) < 0.005);
  }
}
