#pragma once

// Count models for the number of molecules absorbed in a time window:
// the exact binomial law and its Poisson and Gaussian approximations.

#include <cstdint>
#include <span>
#include <string_view>

namespace mcvd {

enum class CountKind { Binomial, Poisson, Gaussian };

std::string_view to_string(CountKind kind);

/// n trials with success probability p. The Poisson model uses mean n p,
/// the Gaussian model mean n p and variance n p (1 - p).
struct CountModel {
  CountKind kind = CountKind::Binomial;
  std::int64_t n = 0;
  double p = 0.0;

  double mean() const { return static_cast<double>(n) * p; }
  double variance() const { return static_cast<double>(n) * p * (1.0 - p); }
  /// Throws std::domain_error on n < 0 or p outside [0, 1].
  void validate() const;
};

/// P(X <= k). k < 0 gives 0. The Gaussian model applies a continuity
/// correction, P(X <= k) = Phi((k + 1/2 - n p) / sqrt(n p (1 - p))).
double count_cdf(const CountModel& model, std::int64_t k);

/// Poisson CDF P(X <= k) for mean mu, via the regularized upper incomplete gamma function.
double poisson_cdf(std::int64_t k, double mu);

/// sup_k |F_emp(k) - F_model(k)| for a sample of nonnegative counts.
/// Throws std::domain_error for an empty sample.
double ks_distance(std::span<const std::int64_t> sample, const CountModel& model);

/// sup_k |F_a(k) - F_b(k)| over k in [-1, max(n_a, n_b)].
double cdf_distance(const CountModel& a, const CountModel& b);

}  // namespace mcvd
