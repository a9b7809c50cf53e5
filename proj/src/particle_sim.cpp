#include "mcvd/particle_sim.hpp"

#include "mcvd/parallel.hpp"
#include "mcvd/rng.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mcvd {
namespace {

// Per-molecule outcome; hit time is meaningful only for Fate::Absorbed.
enum class Fate : std::uint8_t { Absorbed, Degraded, Alive };

struct Outcome {
  Fate fate = Fate::Alive;
  double hit_time = 0.0;
};

// A block of m steps is taken as one Gaussian move of variance m sigma^2 when the
// surface gap g satisfies g >= kBlockMargin * sigma * sqrt(m). Then each coordinate
// would have to travel g / sqrt(3) = 8 block standard deviations, so an absorption
// skipped inside the block has probability below 1e-14 (reflection principle).
constexpr double kBlockMargin = 8.0 * 1.7320508075688772;

Outcome walk_molecule(const SimConfig& cfg, std::int64_t index, std::int64_t n_steps) {
  Xoshiro256 rng(cfg.seed, static_cast<std::uint64_t>(index));
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  const ChannelSpec& ch = cfg.channel;
  const double sigma = std::sqrt(2.0 * ch.diffusion_coeff * cfg.step_dt);
  const double rr = ch.receiver_radius;
  const double rr2 = rr * rr;
  const double lambda = ch.degradation_rate;
  const bool per_step_decay = lambda > 0.0 && cfg.degradation == DegradationSampling::PerStep;

  // Degradation is tracked as the last step the molecule survives.
  std::int64_t last_alive_step = n_steps;
  if (lambda > 0.0 && !per_step_decay) {
    const double lifetime = boost::random::exponential_distribution<double>(lambda)(rng);
    // alive at step k iff k dt <= lifetime
    const double steps = std::floor(lifetime / cfg.step_dt);
    if (steps < static_cast<double>(n_steps)) last_alive_step = static_cast<std::int64_t>(steps);
  }

  const auto [ax, ay, az] = cfg.tx_axis;
  const double norm = std::sqrt(ax * ax + ay * ay + az * az);
  const double start = ch.tx_center_distance / norm;
  double x = ax * start, y = ay * start, z = az * start;
  std::int64_t k = 0;
  while (k < n_steps) {
    const double r = std::sqrt(x * x + y * y + z * z);
    const double ratio = (r - rr) / (kBlockMargin * sigma);
    std::int64_t m = 1;
    if (ratio > 1.5) {
      m = static_cast<std::int64_t>(std::min(ratio * ratio, 1e12));
      m = std::min(m, n_steps - k);
    }
    if (per_step_decay) {
      const double survive = std::exp(-lambda * cfg.step_dt * static_cast<double>(m));
      if (rng.uniform() >= survive) return {Fate::Degraded, 0.0};
    } else if (k + m > last_alive_step) {
      // decays within the next m steps, before any absorption could happen
      return {Fate::Degraded, 0.0};
    }
    const double scale = m == 1 ? sigma : sigma * std::sqrt(static_cast<double>(m));
    x += scale * normal(rng);
    y += scale * normal(rng);
    z += scale * normal(rng);
    k += m;
    if (x * x + y * y + z * z <= rr2) return {Fate::Absorbed, static_cast<double>(k) * cfg.step_dt};
  }
  return {Fate::Alive, 0.0};
}

Outcome first_passage_molecule(const SimConfig& cfg, std::int64_t index) {
  Xoshiro256 rng(cfg.seed, static_cast<std::uint64_t>(index));
  const ChannelSpec& ch = cfg.channel;
  const double lambda = ch.degradation_rate;
  const double lifetime = lambda > 0.0 ? boost::random::exponential_distribution<double>(lambda)(rng)
                                       : std::numeric_limits<double>::infinity();
  double hit = std::numeric_limits<double>::infinity();
  if (rng.uniform() < ch.receiver_radius / ch.tx_center_distance) {
    const double g = boost::random::normal_distribution<double>(0.0, 1.0)(rng);
    const double d = ch.distance();
    hit = d * d / (2.0 * ch.diffusion_coeff * g * g);
  }
  if (hit <= cfg.horizon && hit < lifetime) return {Fate::Absorbed, hit};
  if (lifetime <= cfg.horizon) return {Fate::Degraded, 0.0};
  return {Fate::Alive, 0.0};
}

template <typename PerMolecule>
HitRecordSet run_burst(const SimConfig& cfg, PerMolecule&& per_molecule) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_molecules);
  std::vector<Outcome> outcomes(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) outcomes[i] = per_molecule(static_cast<std::int64_t>(i));
  });

  HitRecordSet records;
  records.n_released = cfg.n_molecules;
  records.horizon = cfg.horizon;
  for (const Outcome& o : outcomes) {
    switch (o.fate) {
      case Fate::Absorbed: records.hit_times.push_back(o.hit_time); break;
      case Fate::Degraded: ++records.n_degraded; break;
      case Fate::Alive: ++records.n_alive_at_horizon; break;
    }
  }
  return records;
}

}  // namespace

void SimConfig::validate() const {
  channel.validate();
  if (n_molecules < 1) throw std::invalid_argument("n_molecules must be at least 1");
  if (!(step_dt > 0.0)) throw std::invalid_argument("step_dt must be positive");
  if (!(horizon >= step_dt) || !std::isfinite(horizon))
    throw std::invalid_argument("horizon must be finite and at least step_dt");
  const auto [ax, ay, az] = tx_axis;
  if (!(ax * ax + ay * ay + az * az > 0.0)) throw std::invalid_argument("tx_axis must be nonzero");
}

std::vector<std::string> SimConfig::warnings() const {
  std::vector<std::string> out;
  const double rms = std::sqrt(2.0 * channel.diffusion_coeff * step_dt);
  if (rms >= channel.receiver_radius / 10.0) {
    std::ostringstream msg;
    msg << "RMS step " << rms << " um per coordinate is not below r_r/10 = "
        << channel.receiver_radius / 10.0 << " um; absorption checks may miss crossings";
    out.push_back(msg.str());
  }
  return out;
}

HitRecordSet simulate_burst(const SimConfig& config) {
  const auto n_steps = static_cast<std::int64_t>(std::floor(config.horizon / config.step_dt + 1e-9));
  return run_burst(config, [&](std::int64_t i) { return walk_molecule(config, i, n_steps); });
}

HitRecordSet sample_first_passage_burst(const SimConfig& config) {
  return run_burst(config, [&](std::int64_t i) { return first_passage_molecule(config, i); });
}

ArrivalHistogram bin_hits(const HitRecordSet& records, double bin_width) {
  if (!(bin_width > 0.0)) throw std::domain_error("bin_hits: bin width must be positive");
  ArrivalHistogram hist;
  hist.bin_width = bin_width;
  const auto n_bins = static_cast<std::size_t>(std::ceil(records.horizon / bin_width - 1e-9));
  hist.counts.assign(std::max<std::size_t>(n_bins, 1), 0);
  for (double t : records.hit_times) {
    // bin k holds (k w, (k + 1) w]
    auto k = static_cast<std::int64_t>(std::ceil(t / bin_width)) - 1;
    k = std::clamp<std::int64_t>(k, 0, static_cast<std::int64_t>(hist.counts.size()) - 1);
    ++hist.counts[static_cast<std::size_t>(k)];
  }
  return hist;
}

double empirical_fraction(const HitRecordSet& records, double t) {
  if (!(t >= 0.0 && t <= records.horizon)) {
    throw std::domain_error("empirical_fraction: t must lie in [0, horizon]");
  }
  const auto hits = std::count_if(records.hit_times.begin(), records.hit_times.end(),
                                  [t](double h) { return h <= t; });
  return static_cast<double>(hits) / static_cast<double>(records.n_released);
}

}  // namespace mcvd
