#include "mcvd/perf_metrics.hpp"

#include "mcvd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcvd {
namespace {

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

double entropy2(double p) { return -plogp(p) - plogp(1.0 - p); }

struct PriorPoint {
  double mi = -1.0;
  std::int64_t tau = 0;
  double pi1 = 0.0;
};

PriorPoint best_threshold(const StationaryErrorModel& model, double pi1) {
  PriorPoint best{-1.0, 0, pi1};
  const auto profiles = model.profiles(pi1);
  for (std::size_t tau = 0; tau < profiles.size(); ++tau) {
    const double mi = mutual_information(profiles[tau], pi1);
    if (mi > best.mi) best = {mi, static_cast<std::int64_t>(tau), pi1};
  }
  return best;
}

// Keeps the higher value; on a tie the smaller prior.
void keep_better(PriorPoint& best, const PriorPoint& candidate) {
  if (candidate.mi > best.mi || (candidate.mi == best.mi && candidate.pi1 < best.pi1)) best = candidate;
}

}  // namespace

std::vector<RocPoint> roc_curve(const LinkConfig& config, std::span<const std::int64_t> taus) {
  if (taus.empty()) throw std::invalid_argument("roc_curve: empty threshold grid");
  if (!std::is_sorted(taus.begin(), taus.end()) || taus.front() < 0)
    throw std::invalid_argument("roc_curve: thresholds must be nonnegative and ascending");
  const ChannelResponseTable table = build_response_table(config);
  const auto profiles = StationaryErrorModel(table, config.n1, config.n0).profiles(config.pi1, taus.back());
  std::vector<RocPoint> roc;
  for (std::int64_t tau : taus) {
    const ErrorProfile& p = profiles[static_cast<std::size_t>(tau)];
    roc.push_back({tau, p.pe0, 1.0 - p.pe1});
  }
  return roc;
}

double pd_at_pf(std::span<const RocPoint> roc, double pf) {
  if (roc.empty()) throw std::invalid_argument("pd_at_pf: empty curve");
  // pf falls as tau grows
  if (pf >= roc.front().pf) return roc.front().pd;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    const RocPoint& a = roc[i - 1];
    const RocPoint& b = roc[i];
    if (pf >= b.pf) {
      if (a.pf == b.pf) return b.pd;
      const double w = (pf - b.pf) / (a.pf - b.pf);
      return b.pd + w * (a.pd - b.pd);
    }
  }
  return roc.back().pd;
}

BerResult ber_from_profiles(std::span<const ErrorProfile> profiles) {
  if (profiles.empty()) throw std::invalid_argument("ber: no profiles");
  BerResult best{profiles[0].pe, 0};
  for (std::size_t tau = 1; tau < profiles.size(); ++tau) {
    if (profiles[tau].pe < best.ber) best = {profiles[tau].pe, static_cast<std::int64_t>(tau)};
  }
  return best;
}

BerResult ber(const LinkConfig& config) {
  const auto profiles = stationary_error_profiles(config);
  return ber_from_profiles(profiles);
}

double mutual_information(double pe0, double pe1, double pi1) {
  if (!(pi1 >= 0.0 && pi1 <= 1.0)) throw std::domain_error("mutual_information: pi1 outside [0, 1]");
  const double pi0 = 1.0 - pi1;
  const double q1 = pi0 * pe0 + pi1 * (1.0 - pe1);
  const double mi = entropy2(q1) - pi0 * entropy2(pe0) - pi1 * entropy2(pe1);
  return std::clamp(mi, 0.0, 1.0);
}

double mutual_information(const ErrorProfile& profile, double pi1) {
  return mutual_information(profile.pe0, profile.pe1, pi1);
}

CapacityResult capacity_for_table(const ChannelResponseTable& table, std::int64_t n1,
                                  const CapacityOptions& options) {
  const StationaryErrorModel model(table, n1);
  PriorPoint best;
  if (options.fixed_prior) {
    best = best_threshold(model, *options.fixed_prior);
  } else {
    if (options.prior_grid < 3) throw std::invalid_argument("capacity: prior grid needs at least 3 points");
    constexpr double lo = 0.01, hi = 0.99;
    const auto n = static_cast<std::size_t>(options.prior_grid);
    std::vector<PriorPoint> grid(n);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        grid[i] = best_threshold(model, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    });
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (grid[i].mi > grid[arg].mi) arg = i;
    }
    best = grid[arg];
    // golden-section refinement between the neighbours of the best grid point
    double a = grid[arg == 0 ? 0 : arg - 1].pi1;
    double b = grid[std::min(arg + 1, n - 1)].pi1;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    PriorPoint fc = best_threshold(model, c);
    PriorPoint fd = best_threshold(model, d);
    keep_better(best, fc);
    keep_better(best, fd);
    while (b - a > options.prior_tol) {
      if (fc.mi >= fd.mi) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = best_threshold(model, c);
        keep_better(best, fc);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = best_threshold(model, d);
        keep_better(best, fd);
      }
    }
  }
  CapacityResult r;
  r.c_bits = best.mi;
  r.ts = table.symbol_duration;
  r.c_bps = best.mi / table.symbol_duration;
  r.tau = best.tau;
  r.pi1 = best.pi1;
  return r;
}

CapacityResult capacity_at_ts(const ChannelSpec& channel, std::int64_t n1, double ts,
                              const CapacityOptions& options) {
  const ChannelResponseTable table =
      build_response_table(channel, ts, options.memory, options.residual_eps, options.memory_cap);
  return capacity_for_table(table, n1, options);
}

CapacitySweep capacity(const ChannelSpec& channel, std::int64_t n1, std::span<const double> ts_grid,
                       const CapacityOptions& options) {
  if (ts_grid.empty()) throw std::invalid_argument("capacity: empty symbol-duration grid");
  std::vector<double> grid(ts_grid.begin(), ts_grid.end());
  std::sort(grid.begin(), grid.end());
  CapacitySweep sweep;
  for (double ts : grid) {
    try {
      sweep.points.push_back(capacity_at_ts(channel, n1, ts, options));
    } catch (const ConvergenceError&) {
      if (!options.skip_unconverged) throw;
      sweep.skipped_ts.push_back(ts);
      continue;
    }
    if (sweep.points.size() == 1 || sweep.points.back().c_bps > sweep.best.c_bps) sweep.best = sweep.points.back();
  }
  if (sweep.points.empty()) throw ConvergenceError("capacity: no symbol duration in the grid converged");
  return sweep;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi >= lo) || n == 0) throw std::invalid_argument("log_grid: need 0 < lo <= hi and n >= 1");
  if (n == 1) return {lo};
  std::vector<double> out(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

std::vector<double> default_ts_grid() { return log_grid(0.001, 1.0, 40); }

}  // namespace mcvd
