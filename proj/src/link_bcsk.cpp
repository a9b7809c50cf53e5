#include "mcvd/link_bcsk.hpp"

#include "mcvd/parallel.hpp"
#include "mcvd/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/binomial_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mcvd {
namespace {

double count_for(std::uint8_t bit, std::int64_t n1, std::int64_t n0) {
  return static_cast<double>(bit ? n1 : n0);
}

// Poisson pmf from 0 until the terms past the mean fall below 1e-20, at most max_len terms.
std::vector<double> poisson_pmf(double mu, std::size_t max_len) {
  if (mu <= 0.0) return {1.0};
  const double log_mu = std::log(mu);
  std::vector<double> pmf;
  for (std::size_t k = 0; k < max_len; ++k) {
    const double kd = static_cast<double>(k);
    const double term = std::exp(-mu + kd * log_mu - std::lgamma(kd + 1.0));
    pmf.push_back(term);
    if (kd > mu && term < 1e-20) break;
  }
  return pmf;
}

// out = (a * b) truncated to max_len terms.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b, std::size_t max_len) {
  std::vector<double> out(std::min(max_len, a.size() + b.size() - 1), 0.0);
  for (std::size_t i = 0; i < a.size() && i < out.size(); ++i) {
    if (a[i] == 0.0) continue;
    const std::size_t jmax = std::min(b.size(), out.size() - i);
    for (std::size_t j = 0; j < jmax; ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// P(count <= tau) for tau in [tau_lo, tau_lo + out.size()).
void poisson_cdf_range(double mu, std::int64_t tau_lo, std::span<double> out) {
  if (mu <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0);
    return;
  }
  if (mu < 500.0) {
    // direct summation from 0; e^-mu does not underflow
    double term = std::exp(-mu), cdf = 0.0;
    const std::int64_t tau_hi = tau_lo + static_cast<std::int64_t>(out.size()) - 1;
    for (std::int64_t k = 0; k <= tau_hi; ++k) {
      cdf += term;
      if (k >= tau_lo) out[static_cast<std::size_t>(k - tau_lo)] = std::min(cdf, 1.0);
      term *= mu / static_cast<double>(k + 1);
    }
    return;
  }
  const double log_mu = std::log(mu);
  double cdf = poisson_cdf(tau_lo, mu);
  out[0] = cdf;
  for (std::size_t j = 1; j < out.size(); ++j) {
    const double k = static_cast<double>(tau_lo) + static_cast<double>(j);
    cdf += std::exp(-mu + k * log_mu - std::lgamma(k + 1.0));
    out[j] = std::min(cdf, 1.0);
  }
}

void gaussian_cdf_range(double mean, double var, std::int64_t tau_lo, std::span<double> out) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double edge = static_cast<double>(tau_lo) + static_cast<double>(j) + 0.5;
    if (var <= 0.0) {
      out[j] = edge >= mean ? 1.0 : 0.0;
    } else {
      out[j] = 0.5 * boost::math::erfc(-(edge - mean) / std::sqrt(2.0 * var));
    }
  }
}

}  // namespace

ErrorProfile ErrorProfile::from_conditionals(double pe0, double pe1, double pi1) {
  return {pe0, pe1, (1.0 - pi1) * pe0 + pi1 * pe1};
}

void LinkConfig::validate() const {
  channel.validate();
  if (!(symbol_duration > 0.0) || !std::isfinite(symbol_duration))
    throw std::invalid_argument("symbol_duration must be positive and finite");
  if (n0 < 0) throw std::invalid_argument("n0 must be nonnegative");
  if (n1 < n0) throw std::invalid_argument("n1 must be at least n0");
  if (threshold < 0) throw std::invalid_argument("threshold must be nonnegative");
  if (!(pi1 >= 0.0 && pi1 <= 1.0)) throw std::invalid_argument("pi1 must lie in [0, 1]");
  if (memory < 0) throw std::invalid_argument("memory must be positive, or 0 for automatic");
  if (!(residual_eps > 0.0)) throw std::invalid_argument("residual_eps must be positive");
}

ChannelResponseTable build_response_table(const ChannelSpec& channel, double symbol_duration,
                                          std::int64_t memory, double eps, std::int64_t cap) {
  channel.validate();
  if (!(symbol_duration > 0.0)) throw std::domain_error("build_response_table: symbol duration must be positive");
  if (memory < 0) throw std::domain_error("build_response_table: negative memory");

  // Slots as differences of the unabsorbed fraction keep the tail accurate.
  const double total = hitting_fraction_total(channel);
  ChannelResponseTable table;
  table.symbol_duration = symbol_duration;
  double left = 1.0;  // isi_fraction at the start of the slot
  for (std::int64_t k = 1;; ++k) {
    const double right = isi_fraction(channel, static_cast<double>(k) * symbol_duration);
    table.slots.push_back(total * std::max(left - right, 0.0));
    left = right;
    table.residual = total * right;
    if (memory != kAutoMemory) {
      if (k == memory) break;
    } else {
      if (table.residual < eps) break;
      if (k >= cap) {
        std::ostringstream msg;
        msg << "response residual " << table.residual << " still above " << eps << " after " << cap
            << " slots of " << symbol_duration << " s";
        throw ConvergenceError(msg.str());
      }
    }
  }
  return table;
}

ChannelResponseTable build_response_table(const LinkConfig& config) {
  config.validate();
  return build_response_table(config.channel, config.symbol_duration, config.memory, config.residual_eps);
}

double poisson_mean_for_symbol(const ChannelResponseTable& table, std::span<const std::uint8_t> bits,
                               std::size_t i, std::int64_t n1, std::int64_t n0) {
  if (i >= bits.size()) throw std::out_of_range("poisson_mean_for_symbol: index past the sequence");
  double mu = 0.0;
  const std::size_t kmax = std::min(table.memory(), i + 1);
  for (std::size_t k = 0; k < kmax; ++k) mu += count_for(bits[i - k], n1, n0) * table.slots[k];
  return mu;
}

DetectionProbs detect_probs_for_symbol(const ChannelResponseTable& table, std::span<const std::uint8_t> bits,
                                       std::size_t i, std::int64_t tau, std::int64_t n1, std::int64_t n0) {
  const double p0 = poisson_cdf(tau, poisson_mean_for_symbol(table, bits, i, n1, n0));
  return {1.0 - p0, p0};
}

ErrorProfile average_error_probs(const LinkConfig& config, const ConvergenceOptions& options, std::uint64_t seed) {
  const ChannelResponseTable table = build_response_table(config);
  const std::int64_t tau = config.threshold;
  return average_error_profiles(config, table, std::span(&tau, 1), options, seed).front();
}

std::vector<ErrorProfile> average_error_profiles(const LinkConfig& config, const ChannelResponseTable& table,
                                                 std::span<const std::int64_t> taus,
                                                 const ConvergenceOptions& options, std::uint64_t seed,
                                                 CountKind model) {
  config.validate();
  if (taus.empty()) throw std::invalid_argument("average_error_profiles: no thresholds");
  if (options.n_sequences < 1 || options.z_max < 1)
    throw std::invalid_argument("average_error_profiles: empty Monte Carlo budget");
  if (model == CountKind::Binomial) throw std::invalid_argument("average_error_profiles: no binomial sum model");
  if (table.slots.empty()) throw std::invalid_argument("average_error_profiles: empty response table");
  const auto [lo_it, hi_it] = std::minmax_element(taus.begin(), taus.end());
  const std::int64_t tau_lo = *lo_it;
  if (tau_lo < 0) throw std::invalid_argument("average_error_profiles: negative threshold");
  const auto n_range = static_cast<std::size_t>(*hi_it - tau_lo + 1);

  const auto n_seq = static_cast<std::size_t>(options.n_sequences);
  const auto z_max = static_cast<std::size_t>(options.z_max);
  const std::size_t window = std::max<std::size_t>(1, z_max / 10);
  const std::size_t n_tau = taus.size();
  const std::size_t memory = table.memory();
  const double s0 = table.slots[0];

  std::vector<std::uint8_t> bits(n_seq * z_max);
  for (std::size_t s = 0; s < n_seq; ++s) {
    Xoshiro256 rng(seed, s);
    for (std::size_t z = 0; z < z_max; ++z) bits[s * z_max + z] = rng.uniform() < config.pi1 ? 1 : 0;
  }

  // Sequences are summed in fixed blocks and the block sums in block order, so
  // the result does not depend on the worker count.
  constexpr std::size_t kBlock = 256;
  const std::size_t n_blocks = (n_seq + kBlock - 1) / kBlock;
  // Per (block, position in chunk, tau): sums of pc0 and pc1.
  std::vector<double> chunk(n_blocks * window * n_tau * 2);
  std::vector<double> sum_pc0(n_tau, 0.0), sum_pc1(n_tau, 0.0);
  // Running averages at the end of every position of the current and previous chunk.
  std::vector<std::vector<double>> history0, history1;
  std::vector<ErrorProfile> result(n_tau);
  bool converged = false;
  std::size_t z_done = 0;

  for (std::size_t z0 = 0; z0 < z_max && !converged; z0 += window) {
    const std::size_t z1 = std::min(z_max, z0 + window);
    std::fill(chunk.begin(), chunk.end(), 0.0);
    parallel_for(n_blocks, [&](std::size_t block_begin, std::size_t block_end) {
      std::vector<double> cdf0(n_range), cdf1(n_range);
      for (std::size_t block = block_begin; block < block_end; ++block) {
        for (std::size_t s = block * kBlock; s < std::min(n_seq, (block + 1) * kBlock); ++s) {
          const std::uint8_t* seq = &bits[s * z_max];
          for (std::size_t z = z0; z < z1; ++z) {
            double mean = 0.0, var = 0.0;
            const std::size_t kmax = std::min(memory, z + 1);
            for (std::size_t k = 1; k < kmax; ++k) {
              const double m = count_for(seq[z - k], config.n1, config.n0) * table.slots[k];
              mean += m;
              var += m * (1.0 - table.slots[k]);
            }
            const double m0 = static_cast<double>(config.n0) * s0;
            const double m1 = static_cast<double>(config.n1) * s0;
            if (model == CountKind::Poisson) {
              poisson_cdf_range(mean + m0, tau_lo, cdf0);
              poisson_cdf_range(mean + m1, tau_lo, cdf1);
            } else {
              gaussian_cdf_range(mean + m0, var + m0 * (1.0 - s0), tau_lo, cdf0);
              gaussian_cdf_range(mean + m1, var + m1 * (1.0 - s0), tau_lo, cdf1);
            }
            double* out = &chunk[((block * window) + (z - z0)) * n_tau * 2];
            for (std::size_t t = 0; t < n_tau; ++t) {
              const auto j = static_cast<std::size_t>(taus[t] - tau_lo);
              out[2 * t] += cdf0[j];
              out[2 * t + 1] += 1.0 - cdf1[j];
            }
          }
        }
      }
    });

    for (std::size_t z = z0; z < z1; ++z) {
      for (std::size_t block = 0; block < n_blocks; ++block) {
        const double* in = &chunk[((block * window) + (z - z0)) * n_tau * 2];
        for (std::size_t t = 0; t < n_tau; ++t) {
          sum_pc0[t] += in[2 * t];
          sum_pc1[t] += in[2 * t + 1];
        }
      }
      const double count = static_cast<double>(n_seq * (z + 1));
      std::vector<double> avg0(n_tau), avg1(n_tau);
      for (std::size_t t = 0; t < n_tau; ++t) {
        avg0[t] = 1.0 - sum_pc0[t] / count;
        avg1[t] = 1.0 - sum_pc1[t] / count;
      }
      history0.push_back(std::move(avg0));
      history1.push_back(std::move(avg1));
    }
    z_done = z1;
    for (std::size_t t = 0; t < n_tau; ++t)
      result[t] = ErrorProfile::from_conditionals(history0.back()[t], history1.back()[t], config.pi1);

    // The window is the last `window` symbols plus the average just before them.
    if (options.tol > 0.0 && history0.size() > window) {
      converged = true;
      for (std::size_t t = 0; t < n_tau && converged; ++t) {
        double lo0 = 1.0, hi0 = 0.0, lo1 = 1.0, hi1 = 0.0;
        for (std::size_t h = history0.size() - window - 1; h < history0.size(); ++h) {
          lo0 = std::min(lo0, history0[h][t]);
          hi0 = std::max(hi0, history0[h][t]);
          lo1 = std::min(lo1, history1[h][t]);
          hi1 = std::max(hi1, history1[h][t]);
        }
        converged = hi0 - lo0 < options.tol && hi1 - lo1 < options.tol;
      }
    }
    // only the last window plus one average is ever needed
    if (history0.size() > window + 1) {
      const auto drop = static_cast<std::ptrdiff_t>(history0.size() - window - 1);
      history0.erase(history0.begin(), history0.begin() + drop);
      history1.erase(history1.begin(), history1.begin() + drop);
    }
  }

  if (options.tol > 0.0 && !converged) {
    std::ostringstream msg;
    msg << "sequence averages moved by " << options.tol << " or more over the last " << window << " of "
        << z_done << " symbols";
    throw ConvergenceError(msg.str(), result);
  }
  return result;
}

StationaryErrorModel::StationaryErrorModel(const ChannelResponseTable& table, std::int64_t n1, std::int64_t n0) {
  if (table.slots.empty()) throw std::invalid_argument("StationaryErrorModel: empty response table");
  if (n0 < 0 || n1 < n0) throw std::invalid_argument("StationaryErrorModel: need n1 >= n0 >= 0");
  const double total = std::accumulate(table.slots.begin(), table.slots.end(), 0.0);
  const double max_mean = static_cast<double>(n1) * total;
  support_ = static_cast<std::size_t>(std::ceil(max_mean + 12.0 * std::sqrt(max_mean) + 40.0));
  current1_ = poisson_pmf(static_cast<double>(n1) * table.slots[0], support_);
  current0_ = poisson_pmf(static_cast<double>(n0) * table.slots[0], support_);
  for (std::size_t k = 1; k < table.slots.size(); ++k) {
    isi_pmf1_.push_back(poisson_pmf(static_cast<double>(n1) * table.slots[k], support_));
    isi_pmf0_.push_back(poisson_pmf(static_cast<double>(n0) * table.slots[k], support_));
  }
}

std::vector<ErrorProfile> StationaryErrorModel::profiles(double pi1, std::int64_t up_to) const {
  if (!(pi1 >= 0.0 && pi1 <= 1.0)) throw std::domain_error("StationaryErrorModel: pi1 outside [0, 1]");
  const double pi0 = 1.0 - pi1;
  std::vector<double> isi{1.0};
  std::vector<double> mix;
  for (std::size_t k = 0; k < isi_pmf1_.size(); ++k) {
    const auto& a = isi_pmf1_[k];
    const auto& b = isi_pmf0_[k];
    mix.assign(std::max(a.size(), b.size()), 0.0);
    for (std::size_t j = 0; j < a.size(); ++j) mix[j] += pi1 * a[j];
    for (std::size_t j = 0; j < b.size(); ++j) mix[j] += pi0 * b[j];
    isi = convolve(isi, mix, support_);
  }
  const std::vector<double> sent0 = convolve(isi, current0_, support_);
  const std::vector<double> sent1 = convolve(isi, current1_, support_);

  // pe0(tau) = P(count > tau | 0) summed from the top to keep small tails accurate.
  std::vector<double> upper0(sent0.size() + 1, 0.0);
  for (std::size_t j = sent0.size(); j-- > 0;) upper0[j] = upper0[j + 1] + sent0[j];

  std::vector<ErrorProfile> out;
  double lower1 = 0.0;
  const auto last = static_cast<std::size_t>(std::max<std::int64_t>(up_to, 0));
  for (std::size_t tau = 0;; ++tau) {
    if (tau < sent1.size()) lower1 += sent1[tau];
    const double pe0 = tau + 1 < upper0.size() ? upper0[tau + 1] : 0.0;
    const double pe1 = std::min(lower1, 1.0);
    out.push_back(ErrorProfile::from_conditionals(pe0, pe1, pi1));
    const bool saturated = pe1 > 1.0 - 1e-9 || tau + 1 >= support_;
    if (saturated && tau >= last) break;
  }
  return out;
}

std::vector<ErrorProfile> stationary_error_profiles(const LinkConfig& config) {
  const ChannelResponseTable table = build_response_table(config);
  return StationaryErrorModel(table, config.n1, config.n0).profiles(config.pi1);
}

WilsonInterval wilson_interval(std::int64_t k, std::int64_t n) {
  if (n <= 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double nd = static_cast<double>(n);
  const double p = static_cast<double>(k) / nd;
  const double denom = 1.0 + z * z / nd;
  const double center = (p + z * z / (2.0 * nd)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nd + z * z / (4.0 * nd * nd));
  // the bounds are exactly 0 and 1 at the extremes
  return {k == 0 ? 0.0 : std::max(0.0, center - half), k == n ? 1.0 : std::min(1.0, center + half)};
}

LinkSimulation simulate_link(const LinkConfig& config, const ChannelResponseTable& table, std::int64_t n_bits,
                             std::uint64_t seed, std::span<const std::int64_t> taus) {
  config.validate();
  if (n_bits < 1) throw std::invalid_argument("simulate_link: n_bits must be at least 1");
  if (table.slots.empty()) throw std::invalid_argument("simulate_link: empty response table");
  const auto n = static_cast<std::size_t>(n_bits);
  LinkSimulation sim;
  sim.sent.resize(n);
  sim.counts.assign(n, 0);

  Xoshiro256 bit_rng(seed, 0);
  for (auto& b : sim.sent) b = bit_rng.uniform() < config.pi1 ? 1 : 0;

  // Each burst is split over its slots multinomially, by conditional binomials;
  // every slot count is then Binomial(n, slots[k]) as in the single-slot law.
  Xoshiro256 rng(seed, 1);
  for (std::size_t j = 0; j < n; ++j) {
    std::int64_t remaining = sim.sent[j] ? config.n1 : config.n0;
    double mass_left = 1.0;
    for (std::size_t k = 0; k < table.memory() && j + k < n && remaining > 0; ++k) {
      const double p = std::clamp(table.slots[k] / mass_left, 0.0, 1.0);
      const std::int64_t c = boost::random::binomial_distribution<std::int64_t, double>(remaining, p)(rng);
      sim.counts[j + k] += c;
      remaining -= c;
      mass_left -= table.slots[k];
      if (mass_left <= 0.0) break;
    }
  }

  sim.decoded.resize(n);
  for (std::size_t i = 0; i < n; ++i) sim.decoded[i] = sim.counts[i] > config.threshold ? 1 : 0;

  const std::int64_t ones = std::count(sim.sent.begin(), sim.sent.end(), std::uint8_t{1});
  const std::int64_t zeros = n_bits - ones;
  std::vector<std::int64_t> tau_list(taus.begin(), taus.end());
  if (tau_list.empty()) tau_list.push_back(config.threshold);
  for (std::int64_t tau : tau_list) {
    std::int64_t false_alarms = 0, misses = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool decide_1 = sim.counts[i] > tau;
      if (sim.sent[i] && !decide_1) ++misses;
      if (!sim.sent[i] && decide_1) ++false_alarms;
    }
    SimulatedProfile sp;
    sp.tau = tau;
    sp.profile.pe0 = zeros > 0 ? static_cast<double>(false_alarms) / static_cast<double>(zeros) : 0.0;
    sp.profile.pe1 = ones > 0 ? static_cast<double>(misses) / static_cast<double>(ones) : 0.0;
    sp.profile.pe = static_cast<double>(false_alarms + misses) / static_cast<double>(n_bits);
    sp.pe0_ci = wilson_interval(false_alarms, zeros);
    sp.pe1_ci = wilson_interval(misses, ones);
    sp.pe_ci = wilson_interval(false_alarms + misses, n_bits);
    sim.profiles.push_back(sp);
  }
  return sim;
}

}  // namespace mcvd
