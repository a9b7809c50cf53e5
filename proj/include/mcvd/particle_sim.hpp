#pragma once

// Monte Carlo Brownian-motion simulation of a point burst of molecules around a
// fully absorbing sphere, with exponential degradation. Ground truth for the
// analytic channel model.

#include "mcvd/channel.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mcvd {

enum class DegradationSampling {
  Lifetime,  ///< one exponential lifetime drawn per molecule at release
  PerStep,   ///< Bernoulli(1 - exp(-lambda dt)) decay test every step
};

struct SimConfig {
  ChannelSpec channel;
  std::int64_t n_molecules = 100000;
  double step_dt = 1e-6;  ///< s
  double horizon = 0.2;   ///< s
  std::uint64_t seed = 1;
  DegradationSampling degradation = DegradationSampling::Lifetime;
  /// Direction from the receiver center to the transmitter; normalized on use.
  std::array<double, 3> tx_axis{0.0, 0.0, 1.0};

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
  /// Non-fatal diagnostics, e.g. an RMS step that is coarse relative to the receiver.
  std::vector<std::string> warnings() const;
};

/// Absorption times and fates of one simulated burst.
struct HitRecordSet {
  std::vector<double> hit_times;  ///< ordered by molecule index
  std::int64_t n_released = 0;
  std::int64_t n_degraded = 0;
  std::int64_t n_alive_at_horizon = 0;
  double horizon = 0.0;

  std::int64_t n_absorbed() const { return static_cast<std::int64_t>(hit_times.size()); }
};

struct ArrivalHistogram {
  double bin_width = 1e-3;
  double t0 = 0.0;
  /// counts[k] = hits in (t0 + k w, t0 + (k + 1) w]
  std::vector<std::int64_t> counts;

  double bin_start(std::size_t k) const { return t0 + static_cast<double>(k) * bin_width; }
};

/// Step-by-step Brownian simulation. Deterministic given the seed and
/// independent of the worker count. Absorption is tested at step ends only.
HitRecordSet simulate_burst(const SimConfig& config);

/// Event-driven sampling of the same burst from the exact first-passage law
/// (hit with probability r_r/r_0 at a Levy-distributed time d^2 / (2 D Z^2)),
/// raced against an exponential lifetime. step_dt is ignored.
HitRecordSet sample_first_passage_burst(const SimConfig& config);

/// Histogram over [0, horizon] with the given bin width.
ArrivalHistogram bin_hits(const HitRecordSet& records, double bin_width);

/// Fraction of released molecules absorbed by time t, t in [0, horizon].
double empirical_fraction(const HitRecordSet& records, double t);

}  // namespace mcvd
