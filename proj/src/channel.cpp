#include "mcvd/channel.hpp"

#include "mcvd/special_functions.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mcvd {
namespace {

void require_time(double t, bool allow_zero, const char* op) {
  if (!(allow_zero ? t >= 0.0 : t > 0.0) || std::isnan(t)) {
    throw std::domain_error(std::string(op) + ": time must be " +
                            (allow_zero ? "non-negative" : "positive") + ", got " +
                            std::to_string(t));
  }
}

// Arguments of the error functions in the degraded CDF:
// x = d / sqrt(4 D t), s = sqrt(lambda t), a d = sqrt(lambda / D) d.
struct CdfTerms {
  double x;
  double s;
  double ad;
};

CdfTerms cdf_terms(const ChannelSpec& spec, double t) {
  const double d = spec.distance();
  const double lambda = spec.degradation_rate;
  return {d / std::sqrt(4.0 * spec.diffusion_coeff * t), std::sqrt(lambda * t),
          std::sqrt(lambda / spec.diffusion_coeff) * d};
}

}  // namespace

void ChannelSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (!(receiver_radius > 0.0) || !std::isfinite(receiver_radius))
    fail("receiver_radius must be positive and finite");
  if (!(tx_center_distance > receiver_radius) || !std::isfinite(tx_center_distance))
    fail("tx_center_distance must exceed receiver_radius (r_0 > r_r)");
  if (!(diffusion_coeff > 0.0) || !std::isfinite(diffusion_coeff))
    fail("diffusion_coeff must be positive and finite");
  if (!(degradation_rate >= 0.0) || std::isnan(degradation_rate))
    fail("degradation_rate must be non-negative");
}

ChannelSpec ChannelSpec::from_distance(double receiver_radius, double distance,
                                       double diffusion_coeff, double degradation_rate) {
  return {receiver_radius, receiver_radius + distance, diffusion_coeff, degradation_rate};
}

HalfLife HalfLife::seconds(double value) {
  if (!(value > 0.0) || std::isnan(value)) {
    throw std::domain_error("half-life must be positive, got " + std::to_string(value));
  }
  if (std::isinf(value)) return HalfLife();
  return HalfLife(value);
}

double HalfLife::value() const {
  return value_ ? *value_ : std::numeric_limits<double>::infinity();
}

double degradation_rate_from_half_life(const HalfLife& h) {
  if (h.is_infinite()) return 0.0;
  return std::numbers::ln2 / h.value();
}

double hitting_rate(const ChannelSpec& spec, double t) {
  require_time(t, false, "hitting_rate");
  const double d = spec.distance();
  const double D = spec.diffusion_coeff;
  // Combined in log space so that t^{-3/2} and exp(-d^2/4Dt) cannot produce inf * 0.
  const double log_h = std::log(spec.receiver_radius / spec.tx_center_distance) + std::log(d) -
                       0.5 * std::log(4.0 * std::numbers::pi * D) - 1.5 * std::log(t) -
                       d * d / (4.0 * D * t) - spec.degradation_rate * t;
  return std::exp(log_h);
}

double hitting_fraction_total(const ChannelSpec& spec) {
  const double ratio = spec.receiver_radius / spec.tx_center_distance;
  if (spec.degradation_rate == 0.0) return ratio;
  return ratio * std::exp(-std::sqrt(spec.degradation_rate / spec.diffusion_coeff) *
                          spec.distance());
}

double hitting_fraction(const ChannelSpec& spec, double t) {
  require_time(t, true, "hitting_fraction");
  if (t == 0.0) return 0.0;
  const double ratio = spec.receiver_radius / spec.tx_center_distance;
  if (std::isinf(t)) return hitting_fraction_total(spec);
  const auto [x, s, ad] = cdf_terms(spec, t);
  if (spec.degradation_rate == 0.0) return ratio * boost::math::erfc(x);
  // F = (r_r / 2 r_0) [exp(-ad) erfc(x - s) + exp(ad) erfc(x + s)]
  const double slow = std::exp(-ad) * boost::math::erfc(x - s);
  const double fast = exp_times_erfc(ad, x + s);
  return 0.5 * ratio * (slow + fast);
}

double channel_response(const ChannelSpec& spec, double t1, double t2) {
  require_time(t1, true, "channel_response");
  if (!(t1 < t2)) {
    throw std::domain_error("channel_response: requires t1 < t2");
  }
  return std::max(0.0, hitting_fraction(spec, t2) - hitting_fraction(spec, t1));
}

double expected_arrivals(double n_tx, const ChannelSpec& spec, double t1, double t2) {
  return n_tx * channel_response(spec, t1, t2);
}

double peak_time(const ChannelSpec& spec) {
  const double d = spec.distance();
  const double D = spec.diffusion_coeff;
  const double lambda = spec.degradation_rate;
  // Positive root of 4 D lambda t^2 + 6 D t - d^2 = 0 in conjugate form; exact at lambda = 0.
  return 2.0 * d * d / (std::sqrt(36.0 * D * D + 16.0 * D * d * d * lambda) + 6.0 * D);
}

double peak_amplitude(const ChannelSpec& spec, PeakWindow window, double n_tx,
                      PeakAmplitudeMode mode) {
  if (!(window.width > 0.0)) throw std::domain_error("peak_amplitude: window width must be positive");
  const double tp = peak_time(spec);
  if (mode == PeakAmplitudeMode::Midpoint) {
    return n_tx * window.width * hitting_rate(spec, tp);
  }
  const double lo = std::max(0.0, tp - 0.5 * window.width);
  return n_tx * channel_response(spec, lo, tp + 0.5 * window.width);
}

double isi_fraction(const ChannelSpec& spec, double t) {
  require_time(t, true, "isi_fraction");
  if (t == 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  const auto [x, s, ad] = cdf_terms(spec, t);
  if (spec.degradation_rate == 0.0) return boost::math::erf(x);
  // ITR = (1/2){erf(x - s) + 1 - exp(2ad) erfc(x + s)}. Using (x + s)^2 - 2ad = (s - x)^2,
  // both terms share the factor exp(-(s - x)^2) once s > x.
  const double gap = s - x;
  if (gap > 0.0) {
    return 0.5 * std::exp(-gap * gap) * (erfcx(gap) - erfcx(x + s));
  }
  return 0.5 * (boost::math::erfc(gap) - exp_times_erfc(2.0 * ad, x + s));
}

}  // namespace mcvd
