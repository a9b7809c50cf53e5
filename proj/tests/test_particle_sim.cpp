#include "doctest.h"

#include "mcvd/channel.hpp"
#include "mcvd/particle_sim.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>

using namespace mcvd;

namespace {

const double kLambda16 = std::numbers::ln2 / 0.016;

SimConfig table2_config(double lambda, std::int64_t n, double horizon = 0.2) {
  SimConfig cfg;
  cfg.channel = {10.0, 14.0, 79.4, lambda};
  cfg.n_molecules = n;
  cfg.horizon = horizon;
  cfg.seed = 7;
  return cfg;
}

double three_sigma(double p, std::int64_t n) { return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

void check_conservation(const HitRecordSet& r) {
  CHECK(r.n_absorbed() + r.n_degraded + r.n_alive_at_horizon == r.n_released);
  for (double t : r.hit_times) {
    CHECK(t > 0.0);
    CHECK(t <= r.horizon);
  }
}

// One shared Table II burst without degradation.
const HitRecordSet& table2_burst() {
  static const HitRecordSet records = simulate_burst(table2_config(0.0, 100000));
  return records;
}

}  // namespace

TEST_CASE("sim config validation") {
  SimConfig cfg = table2_config(0.0, 10);
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.warnings().empty());
  cfg.n_molecules = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = table2_config(0.0, 10);
  cfg.step_dt = 0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = table2_config(0.0, 10);
  cfg.channel.tx_center_distance = 9.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = table2_config(0.0, 10);
  cfg.step_dt = 1e-3;  // RMS 0.398 um < 1 um
  CHECK(cfg.warnings().empty());
  cfg.step_dt = 1e-1;  // RMS 3.98 um
  CHECK(cfg.warnings().size() == 1);
}

TEST_CASE("absorbed fraction without degradation matches the analytic CDF") {
  const HitRecordSet& r = table2_burst();
  check_conservation(r);
  CHECK(r.n_degraded == 0);
  const double analytic = hitting_fraction({10.0, 14.0, 79.4, 0.0}, 0.2);
  const double frac = static_cast<double>(r.n_absorbed()) / static_cast<double>(r.n_released);
  CHECK(std::abs(frac - analytic) < three_sigma(analytic, r.n_released));

  const double at_01 = hitting_fraction({10.0, 14.0, 79.4, 0.0}, 0.1);
  CHECK(std::abs(empirical_fraction(r, 0.1) - at_01) < three_sigma(at_01, r.n_released));
  CHECK(empirical_fraction(r, 0.0) == 0.0);
  CHECK(empirical_fraction(r, 0.2) == doctest::Approx(frac));
  CHECK_THROWS_AS(empirical_fraction(r, 0.3), std::domain_error);
  CHECK_THROWS_AS(empirical_fraction(r, -0.1), std::domain_error);

  // peak millisecond
  const ArrivalHistogram hist = bin_hits(r, 1e-3);
  CHECK(hist.counts.size() == 200);
  const double expected = expected_arrivals(1e5, {10.0, 14.0, 79.4, 0.0}, 0.033, 0.034);
  CHECK(std::abs(static_cast<double>(hist.counts[33]) - expected) < 3.0 * std::sqrt(expected));
}

TEST_CASE("absorbed fraction with degradation") {
  const HitRecordSet r = simulate_burst(table2_config(kLambda16, 100000));
  check_conservation(r);
  const double analytic = hitting_fraction({10.0, 14.0, 79.4, kLambda16}, 0.2);
  const double frac = static_cast<double>(r.n_absorbed()) / 1e5;
  CHECK(std::abs(frac - analytic) < three_sigma(analytic, 100000));
  CHECK(std::abs(frac - 0.0372) < 0.0018);
}

TEST_CASE("instant degradation leaves nothing to absorb") {
  const HitRecordSet r = simulate_burst(table2_config(1e12, 1000));
  CHECK(r.n_absorbed() == 0);
  CHECK(r.n_degraded == 1000);
}

TEST_CASE("seed determinism and worker independence") {
  SimConfig cfg = table2_config(std::numbers::ln2 / 0.128, 3000, 0.05);
  ::setenv("MCVD_THREADS", "1", 1);
  const HitRecordSet serial = simulate_burst(cfg);
  ::setenv("MCVD_THREADS", "3", 1);
  const HitRecordSet parallel = simulate_burst(cfg);
  const HitRecordSet again = simulate_burst(cfg);
  ::unsetenv("MCVD_THREADS");
  CHECK(serial.hit_times == parallel.hit_times);
  CHECK(serial.n_degraded == parallel.n_degraded);
  CHECK(parallel.hit_times == again.hit_times);
  cfg.seed = 8;
  CHECK(simulate_burst(cfg).hit_times != serial.hit_times);
}

TEST_CASE("per-step degradation matches pre-sampled lifetimes") {
  SimConfig cfg = table2_config(kLambda16, 40000, 0.1);
  const HitRecordSet lifetime = simulate_burst(cfg);
  cfg.degradation = DegradationSampling::PerStep;
  cfg.seed = 99;
  const HitRecordSet per_step = simulate_burst(cfg);
  const double p1 = lifetime.n_absorbed() / 40000.0;
  const double p2 = per_step.n_absorbed() / 40000.0;
  const double p = 0.5 * (p1 + p2);
  CHECK(std::abs(p1 - p2) < std::sqrt(2.0) * three_sigma(p, 40000));
  const double d1 = lifetime.n_degraded / 40000.0;
  const double d2 = per_step.n_degraded / 40000.0;
  CHECK(std::abs(d1 - d2) < std::sqrt(2.0) * three_sigma(0.5 * (d1 + d2), 40000));
}

TEST_CASE("halving the step changes the estimate by less than the statistical band") {
  SimConfig cfg = table2_config(0.0, 40000, 0.1);
  cfg.step_dt = 1e-5;
  const double coarse = simulate_burst(cfg).n_absorbed() / 40000.0;
  cfg.step_dt = 5e-6;
  cfg.seed = 1234;
  const double fine = simulate_burst(cfg).n_absorbed() / 40000.0;
  CHECK(std::abs(coarse - fine) < std::sqrt(2.0) * three_sigma(0.5 * (coarse + fine), 40000));
}

TEST_CASE("transmitter direction does not matter") {
  SimConfig cfg = table2_config(0.0, 30000, 0.1);
  cfg.step_dt = 1e-5;
  const double along_z = simulate_burst(cfg).n_absorbed() / 30000.0;
  cfg.tx_axis = {1.0, -2.0, 0.5};
  const double skewed = simulate_burst(cfg).n_absorbed() / 30000.0;
  CHECK(std::abs(along_z - skewed) < std::sqrt(2.0) * three_sigma(0.5 * (along_z + skewed), 30000));
}

TEST_CASE("exact first-passage sampling") {
  for (double lambda : {0.0, kLambda16}) {
    SimConfig cfg = table2_config(lambda, 200000);
    const HitRecordSet r = sample_first_passage_burst(cfg);
    check_conservation(r);
    const ChannelSpec spec = cfg.channel;
    for (double t : {0.01, 0.05, 0.2}) {
      const double analytic = hitting_fraction(spec, t);
      CHECK(std::abs(empirical_fraction(r, t) - analytic) < three_sigma(analytic, cfg.n_molecules));
    }
  }
}

TEST_CASE("histogram binning") {
  HitRecordSet empty;
  empty.n_released = 10;
  empty.horizon = 0.005;
  const ArrivalHistogram h0 = bin_hits(empty, 1e-3);
  CHECK(h0.counts.size() == 5);
  for (auto c : h0.counts) CHECK(c == 0);

  HitRecordSet one;
  one.n_released = 1;
  one.horizon = 0.001;
  one.hit_times = {0.0005};
  CHECK(bin_hits(one, 0.001).counts == std::vector<std::int64_t>{1});

  HitRecordSet edges;
  edges.n_released = 3;
  edges.horizon = 0.003;
  edges.hit_times = {0.001, 0.0010001, 0.003};
  const ArrivalHistogram h = bin_hits(edges, 0.001);
  CHECK(h.counts == std::vector<std::int64_t>{1, 1, 1});
  CHECK(h.bin_start(2) == doctest::Approx(0.002));
  CHECK_THROWS_AS(bin_hits(edges, 0.0), std::domain_error);
}
