#pragma once

// Binary concentration shift keying over the degraded diffusion channel:
// bit-1 releases n1 molecules, bit-0 releases n0 (normally none), and the
// receiver decides 1 when more than tau molecules arrive in the symbol slot.
// Molecules of earlier symbols that arrive late are the inter-symbol interference.

#include "mcvd/arrival_stats.hpp"
#include "mcvd/channel.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcvd {

/// Passed as the memory length to size the response table automatically.
inline constexpr std::int64_t kAutoMemory = 0;

struct ErrorProfile {
  double pe0 = 0.0;  ///< P(decide 1 | sent 0), false alarm
  double pe1 = 0.0;  ///< P(decide 0 | sent 1), missed detection
  double pe = 0.0;   ///< pi0 pe0 + pi1 pe1

  static ErrorProfile from_conditionals(double pe0, double pe1, double pi1);
};

/// Raised when a truncation or an iterative average does not converge.
/// `partial` holds the estimates reached so far, when there are any.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what, std::vector<ErrorProfile> partial = {})
      : std::runtime_error(what), partial(std::move(partial)) {}
  std::vector<ErrorProfile> partial;
};

struct LinkConfig {
  ChannelSpec channel;
  double symbol_duration = 0.06;  ///< t_s (s)
  std::int64_t n1 = 1000;         ///< molecules released for bit-1
  std::int64_t n0 = 0;            ///< molecules released for bit-0
  std::int64_t threshold = 15;    ///< tau; decide 1 iff count > tau
  double pi1 = 0.5;               ///< prior of bit-1
  std::int64_t memory = kAutoMemory;  ///< response slots kept, current one included
  double residual_eps = 1e-6;     ///< target response residual for automatic memory

  double pi0() const { return 1.0 - pi1; }
  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
};

/// Expected arrival fractions of a burst per symbol slot:
/// slots[k] = F_c(k t_s, (k + 1) t_s).
struct ChannelResponseTable {
  std::vector<double> slots;
  double residual = 0.0;  ///< fraction absorbed after the last slot
  double symbol_duration = 0.0;

  std::size_t memory() const { return slots.size(); }
};

/// With memory = kAutoMemory, returns the shortest table whose residual is
/// below eps, and throws ConvergenceError if that needs more than cap slots.
/// A fixed memory is honored whatever the residual.
ChannelResponseTable build_response_table(const ChannelSpec& channel, double symbol_duration,
                                          std::int64_t memory = kAutoMemory, double eps = 1e-6,
                                          std::int64_t cap = 10000);

/// Table for a link configuration (its memory and residual_eps).
ChannelResponseTable build_response_table(const LinkConfig& config);

/// Expected count in slot i (0-based) given the bits sent so far:
/// sum over k < memory, k <= i of n(bits[i - k]) * slots[k].
double poisson_mean_for_symbol(const ChannelResponseTable& table, std::span<const std::uint8_t> bits,
                               std::size_t i, std::int64_t n1, std::int64_t n0 = 0);

struct DetectionProbs {
  double p_decide_1 = 0.0;
  double p_decide_0 = 0.0;
};

/// Poisson detection model for slot i: p_decide_0 = P(Poisson(mu_i) <= tau).
DetectionProbs detect_probs_for_symbol(const ChannelResponseTable& table, std::span<const std::uint8_t> bits,
                                       std::size_t i, std::int64_t tau, std::int64_t n1, std::int64_t n0 = 0);

struct ConvergenceOptions {
  std::int64_t n_sequences = 64;
  std::int64_t z_max = 2000;
  /// Stop once the running averages of pe0 and pe1 stay within tol over the
  /// last z_max/10 symbols. tol <= 0 runs the full budget without checking.
  double tol = 1e-5;
};

/// Sequence-averaged error probabilities at the configured threshold.
/// Monte Carlo over i.i.d. Bernoulli(pi1) sequences: at each position the
/// conditional probabilities of a correct decision for a forced 0 and a forced 1
/// are evaluated given the realized prefix and averaged over positions and sequences.
ErrorProfile average_error_probs(const LinkConfig& config, const ConvergenceOptions& options = {},
                                 std::uint64_t seed = 1);

/// Same average for several thresholds sharing the sequences. `model` selects the
/// conditional count law: Poisson, or Gaussian with summed per-slot means and
/// binomial variances and a continuity correction.
std::vector<ErrorProfile> average_error_profiles(const LinkConfig& config, const ChannelResponseTable& table,
                                                 std::span<const std::int64_t> taus,
                                                 const ConvergenceOptions& options = {}, std::uint64_t seed = 1,
                                                 CountKind model = CountKind::Poisson);

/// Exact limit of the sequence average as the sequence length grows, under the
/// Poisson model. The interference count is a sum of independent per-slot
/// terms, each Poisson(n1 s_k) with probability pi1 and Poisson(n0 s_k)
/// otherwise, so its law is their convolution.
class StationaryErrorModel {
 public:
  StationaryErrorModel(const ChannelResponseTable& table, std::int64_t n1, std::int64_t n0 = 0);

  /// Profiles for tau = 0, 1, ..., tau_max, where tau_max is the first tau with
  /// pe1 > 1 - 1e-9 (pe only grows beyond it), extended to at least up_to.
  std::vector<ErrorProfile> profiles(double pi1, std::int64_t up_to = 0) const;

 private:
  std::vector<std::vector<double>> isi_pmf1_;  // per ISI slot, bit-1 arrivals
  std::vector<std::vector<double>> isi_pmf0_;  // per ISI slot, bit-0 arrivals
  std::vector<double> current1_;
  std::vector<double> current0_;
  std::size_t support_ = 0;
};

/// Stationary profiles for the configuration's channel, symbol duration and priors.
std::vector<ErrorProfile> stationary_error_profiles(const LinkConfig& config);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(double p) const { return p >= lo && p <= hi; }
};

/// 95% Wilson score interval for k successes in n trials.
WilsonInterval wilson_interval(std::int64_t k, std::int64_t n);

struct SimulatedProfile {
  std::int64_t tau = 0;
  ErrorProfile profile;  ///< pe is the overall error rate, i.e. weighted by the realized priors
  WilsonInterval pe0_ci, pe1_ci, pe_ci;
};

struct LinkSimulation {
  std::vector<std::uint8_t> sent;
  std::vector<std::int64_t> counts;  ///< molecules received per slot
  std::vector<std::uint8_t> decoded;  ///< decisions at the configured threshold
  std::vector<SimulatedProfile> profiles;  ///< one per requested threshold
};

/// Sends n_bits i.i.d. bits. A burst of n molecules sent in slot j contributes
/// Binomial(n, slots[k]) arrivals to slot j + k for each k < memory. Every
/// threshold is evaluated on the same realization.
LinkSimulation simulate_link(const LinkConfig& config, const ChannelResponseTable& table, std::int64_t n_bits,
                             std::uint64_t seed, std::span<const std::int64_t> taus = {});

}  // namespace mcvd
