#pragma once

// Closed-form model of the 3-D diffusion channel between a point transmitter
// and a fully absorbing spherical receiver, with exponential degradation of
// the messenger molecules.
//
// Units throughout: lengths in um, times in s, D in um^2/s, rates in 1/s.

#include <optional>

namespace mcvd {

/// Geometry, medium and degradation of one transmitter/receiver pair.
struct ChannelSpec {
  double receiver_radius = 10.0;     ///< r_r (um)
  double tx_center_distance = 14.0;  ///< r_0, transmitter to receiver center (um)
  double diffusion_coeff = 79.4;     ///< D (um^2/s)
  double degradation_rate = 0.0;     ///< lambda (1/s); 0 means no degradation

  /// Distance from the transmitter to the receiver surface, r_0 - r_r.
  double distance() const { return tx_center_distance - receiver_radius; }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;

  /// Builds a spec from the surface distance d = r_0 - r_r.
  static ChannelSpec from_distance(double receiver_radius, double distance, double diffusion_coeff,
                                   double degradation_rate);
};

/// Molecule half-life; a disengaged value means the molecule never degrades.
class HalfLife {
 public:
  static HalfLife infinite() { return HalfLife(); }
  static HalfLife seconds(double value);

  bool is_infinite() const { return !value_; }
  /// Half-life in seconds; +inf for the infinite half-life.
  double value() const;

 private:
  HalfLife() = default;
  explicit HalfLife(double v) : value_(v) {}
  std::optional<double> value_;
};

/// Width of the counting window centered at the peak time.
struct PeakWindow {
  double width = 1e-6;  ///< xi (s)
};

enum class PeakAmplitudeMode {
  Midpoint,       ///< N * xi * h(t_peak)
  ExactIntegral,  ///< N * F_c(t_peak - xi/2, t_peak + xi/2)
};

/// lambda = ln 2 / half-life; 0 for the infinite half-life.
double degradation_rate_from_half_life(const HalfLife& h);

/// First-hitting-time density of a molecule that has not degraded (1/s).
double hitting_rate(const ChannelSpec& spec, double t);

/// Fraction of released molecules ever absorbed before degrading.
double hitting_fraction_total(const ChannelSpec& spec);

/// Fraction of released molecules absorbed by time t (CDF of the hit time).
double hitting_fraction(const ChannelSpec& spec, double t);

/// Expected fraction of a burst released at 0 that is absorbed in [t1, t2].
double channel_response(const ChannelSpec& spec, double t1, double t2);

double expected_arrivals(double n_tx, const ChannelSpec& spec, double t1, double t2);

/// Time maximizing hitting_rate.
double peak_time(const ChannelSpec& spec);

double peak_amplitude(const ChannelSpec& spec, PeakWindow window, double n_tx,
                      PeakAmplitudeMode mode = PeakAmplitudeMode::Midpoint);

/// Fraction of the eventually absorbed molecules not yet absorbed at time t.
/// Depends on the geometry only through d = r_0 - r_r.
double isi_fraction(const ChannelSpec& spec, double t);

}  // namespace mcvd
