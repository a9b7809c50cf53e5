#include "mcvd/arrival_stats.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mcvd {

std::string_view to_string(CountKind kind) {
  switch (kind) {
    case CountKind::Binomial: return "binomial";
    case CountKind::Poisson: return "poisson";
    case CountKind::Gaussian: return "gaussian";
  }
  return "unknown";
}

void CountModel::validate() const {
  if (n < 0) throw std::domain_error("count model: n must be non-negative");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("count model: p must lie in [0, 1]");
}

double poisson_cdf(std::int64_t k, double mu) {
  if (!(mu >= 0.0)) throw std::domain_error("poisson_cdf: mean must be non-negative");
  if (k < 0) return 0.0;
  if (mu == 0.0) return 1.0;
  if (std::isinf(mu)) return 0.0;
  return boost::math::gamma_q(static_cast<double>(k) + 1.0, mu);
}

double count_cdf(const CountModel& model, std::int64_t k) {
  model.validate();
  if (k < 0 && model.kind != CountKind::Gaussian) return 0.0;
  switch (model.kind) {
    case CountKind::Binomial: {
      if (k >= model.n) return 1.0;
      if (model.p == 0.0) return 1.0;
      if (model.p == 1.0) return 0.0;
      // P(X <= k) = I_{1-p}(n - k, k + 1)
      return boost::math::ibetac(static_cast<double>(k) + 1.0,
                                 static_cast<double>(model.n - k), model.p);
    }
    case CountKind::Poisson:
      return poisson_cdf(k, model.mean());
    case CountKind::Gaussian: {
      const double sd = std::sqrt(model.variance());
      const double x = static_cast<double>(k) + 0.5 - model.mean();
      if (sd == 0.0) return x >= 0.0 ? 1.0 : 0.0;
      return 0.5 * boost::math::erfc(-x / (sd * std::numbers::sqrt2));
    }
  }
  return 0.0;
}

double ks_distance(std::span<const std::int64_t> sample, const CountModel& model) {
  if (sample.empty()) throw std::domain_error("ks_distance: empty sample");
  std::vector<std::int64_t> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 0) throw std::domain_error("ks_distance: counts must be non-negative");

  const double total = static_cast<double>(sorted.size());
  // Both CDFs are right-continuous step functions on the integers; below -1 and above the
  // sample maximum the gap can only shrink.
  double worst = count_cdf(model, -1);
  std::size_t idx = 0;
  for (std::int64_t k = 0; k <= sorted.back(); ++k) {
    while (idx < sorted.size() && sorted[idx] <= k) ++idx;
    worst = std::max(worst, std::abs(static_cast<double>(idx) / total - count_cdf(model, k)));
  }
  return worst;
}

double cdf_distance(const CountModel& a, const CountModel& b) {
  const std::int64_t top = std::max(a.n, b.n);
  double worst = 0.0;
  for (std::int64_t k = -1; k <= top; ++k) {
    worst = std::max(worst, std::abs(count_cdf(a, k) - count_cdf(b, k)));
  }
  return worst;
}

}  // namespace mcvd
