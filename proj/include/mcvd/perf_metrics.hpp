#pragma once

// Link-level figures of merit computed from the stationary error model:
// ROC, bit error rate minimized over the threshold, and capacity of the
// resulting binary asymmetric channel.

#include "mcvd/link_bcsk.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mcvd {

struct RocPoint {
  std::int64_t tau = 0;
  double pf = 0.0;  ///< pe0
  double pd = 0.0;  ///< 1 - pe1
};

/// One point per threshold; the configured threshold is ignored.
std::vector<RocPoint> roc_curve(const LinkConfig& config, std::span<const std::int64_t> taus);

/// pd at the requested false-alarm rate, interpolated linearly in pf between
/// neighbouring thresholds; clamped to the end points outside their range.
double pd_at_pf(std::span<const RocPoint> roc, double pf);

struct BerResult {
  double ber = 0.0;
  std::int64_t tau_star = 0;
};

/// Minimum of pe over tau in [0, tau_max]; ties go to the smaller tau.
BerResult ber(const LinkConfig& config);
BerResult ber_from_profiles(std::span<const ErrorProfile> profiles);

/// I(S; S_hat) in bits for crossover probabilities pe0, pe1 and prior pi1.
double mutual_information(const ErrorProfile& profile, double pi1);
double mutual_information(double pe0, double pe1, double pi1);

struct CapacityOptions {
  /// Fixed bit-1 prior; otherwise optimized over [0.01, 0.99].
  std::optional<double> fixed_prior;
  std::int64_t prior_grid = 33;  ///< grid points seeding the golden-section search
  double prior_tol = 1e-6;       ///< golden-section bracket width at which to stop
  std::int64_t memory = kAutoMemory;
  double residual_eps = 1e-6;
  std::int64_t memory_cap = 10000;
  /// In a sweep, leave out symbol durations whose response table does not
  /// converge instead of failing the sweep.
  bool skip_unconverged = false;
};

struct CapacityResult {
  double c_bits = 0.0;  ///< bits per channel use
  double c_bps = 0.0;   ///< bits per second, c_bits / t_s
  std::int64_t tau = 0;
  double pi1 = 0.5;
  double ts = 0.0;
};

/// Best mutual information over integer thresholds and the prior at one symbol duration.
CapacityResult capacity_at_ts(const ChannelSpec& channel, std::int64_t n1, double ts,
                              const CapacityOptions& options = {});

/// Same search on a prebuilt response table.
CapacityResult capacity_for_table(const ChannelResponseTable& table, std::int64_t n1,
                                  const CapacityOptions& options = {});

/// Result of capacity_at_ts at every grid point and the one with the largest c_bps
/// (ties go to the smaller t_s).
struct CapacitySweep {
  CapacityResult best;
  std::vector<CapacityResult> points;
  std::vector<double> skipped_ts;  ///< grid points left out by skip_unconverged
};

CapacitySweep capacity(const ChannelSpec& channel, std::int64_t n1, std::span<const double> ts_grid,
                       const CapacityOptions& options = {});

/// n points spaced evenly in log between lo and hi, both included.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// 40 log-spaced symbol durations in [0.001, 1] s.
std::vector<double> default_ts_grid();

}  // namespace mcvd
