#include "cli_params.hpp"

#include "mcvd/arrival_stats.hpp"
#include "mcvd/parallel.hpp"
#include "mcvd/perf_metrics.hpp"
#include "mcvd/rng.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <numeric>

#ifndef MCVD_VERSION
#define MCVD_VERSION "0.0.0"
#endif

namespace mcvd {
namespace {

using detail::half_life_label;
using detail::Params;

struct Cell {
  std::string text;

  Cell(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    text = buf;
  }
  template <std::integral T>
  Cell(T x) : text(std::to_string(x)) {}
  Cell(std::string s) : text(std::move(s)) {}
  Cell(const char* s) : text(s) {}
};

class Csv {
 public:
  Csv(std::string name, std::initializer_list<const char*> header) : name_(std::move(name)) {
    append_line(std::vector<Cell>(header.begin(), header.end()));
  }

  void row(std::initializer_list<Cell> cells) {
    append_line(std::vector<Cell>(cells));
    ++rows_;
  }

  const std::string& name() const { return name_; }
  const std::string& body() const { return body_; }
  std::uint64_t rows() const { return rows_; }

 private:
  void append_line(const std::vector<Cell>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ += ',';
      body_ += cells[i].text;
    }
    body_ += '\n';
  }

  std::string name_;
  std::string body_;
  std::uint64_t rows_ = 0;
};

struct Outputs {
  std::deque<Csv> files;  // stable references across add()
  std::vector<std::string> notes;

  Csv& add(std::string name, std::initializer_list<const char*> header) {
    files.emplace_back(std::move(name), header);
    return files.back();
  }
};

struct Curve {
  double distance;
  HalfLife half_life;
  ChannelSpec channel;
};

std::vector<Curve> curves(const Params& p) {
  std::vector<Curve> out;
  for (double d : p.distances()) {
    for (const HalfLife& h : p.half_lives()) out.push_back({d, h, p.channel(d, h)});
  }
  return out;
}

std::string describe(const Curve& c) {
  return "d=" + detail::format_real(c.distance) + " half_life=" + half_life_label(c.half_life);
}

std::vector<std::int64_t> threshold_range(const Params& p) {
  std::vector<std::int64_t> taus(static_cast<std::size_t>(p.integer("tau_max") + 1));
  std::iota(taus.begin(), taus.end(), 0);
  return taus;
}

CapacityOptions capacity_options(const Params& p) {
  if (p.integer("n0") != 0) throw ConfigError("n0: capacity assumes a silent bit-0 (n0 = 0)");
  CapacityOptions o;
  o.fixed_prior = p.prior();
  o.prior_grid = p.integer("prior_grid");
  o.memory = p.memory();
  o.residual_eps = p.real("residual_eps");
  o.memory_cap = p.integer("memory_cap");
  o.skip_unconverged = p.flag("skip_unconverged");
  return o;
}

HitRecordSet simulate(const Params& p, const SimConfig& sim) {
  return p.choice("sampler", {"brownian", "first-passage"}) == "brownian" ? simulate_burst(sim)
                                                                          : sample_first_passage_burst(sim);
}

void fig1_hitmap(const Params& p, Outputs& out) {
  Csv& hits = out.add("hits.csv", {"distance", "half_life", "hit_time_s"});
  Csv& hist = out.add("histogram.csv", {"distance", "half_life", "bin_start_s", "count", "expected"});
  const double width = p.real("bin_width");
  for (const Curve& c : curves(p)) {
    const SimConfig sim = p.sim(c.channel);
    for (const auto& w : sim.warnings()) out.notes.push_back(describe(c) + ": " + w);
    HitRecordSet records = simulate(p, sim);
    std::vector<double> times = records.hit_times;
    std::sort(times.begin(), times.end());
    const std::string label = half_life_label(c.half_life);
    for (double t : times) hits.row({c.distance, label, t});
    const ArrivalHistogram h = bin_hits(records, width);
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      const double t0 = h.bin_start(k);
      const double t1 = std::min(t0 + width, records.horizon);
      const double expected = t0 > 0.0 ? expected_arrivals(static_cast<double>(records.n_released), c.channel, t0, t1)
                                       : static_cast<double>(records.n_released) * hitting_fraction(c.channel, t1);
      hist.row({c.distance, label, t0, h.counts[k], expected});
    }
    out.notes.push_back(describe(c) + ": absorbed " + std::to_string(records.n_absorbed()) + ", degraded " +
                        std::to_string(records.n_degraded) + ", alive " + std::to_string(records.n_alive_at_horizon));
  }
}

void fig2_arrival(const Params& p, Outputs& out) {
  Csv& counts_csv =
      out.add("counts.csv", {"distance", "half_life", "window_start_s", "window_end_s", "replication", "count"});
  Csv& cdf_csv = out.add("cdf.csv", {"distance", "half_life", "window_start_s", "window_end_s", "k", "empirical",
                                     "binomial", "poisson", "gaussian"});
  Csv& ks_csv = out.add("ks.csv", {"distance", "half_life", "window_start_s", "window_end_s", "model", "ks"});
  const auto windows = p.windows();
  const std::int64_t reps = p.integer("replications");
  double horizon = p.real("horizon");
  for (const auto& w : windows) horizon = std::max(horizon, w.end);

  for (const Curve& c : curves(p)) {
    const std::string label = half_life_label(c.half_life);
    std::vector<std::vector<std::int64_t>> counts(windows.size(), std::vector<std::int64_t>(reps));
    for (std::int64_t r = 0; r < reps; ++r) {
      SimConfig sim = p.sim(c.channel);
      sim.horizon = horizon;
      // replication seeds come from their own stream family
      sim.seed = Xoshiro256(p.seed(), (std::uint64_t{1} << 40) + static_cast<std::uint64_t>(r))();
      const HitRecordSet records = simulate(p, sim);
      for (std::size_t i = 0; i < windows.size(); ++i) {
        counts[i][r] = std::count_if(records.hit_times.begin(), records.hit_times.end(),
                                     [&](double t) { return t > windows[i].start && t <= windows[i].end; });
      }
    }
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& [start, end] = windows[i];
      std::vector<std::int64_t>& sample = counts[i];
      for (std::int64_t r = 0; r < reps; ++r) counts_csv.row({c.distance, label, start, end, r, sample[r]});

      const double prob = start > 0.0 ? channel_response(c.channel, start, end) : hitting_fraction(c.channel, end);
      const std::int64_t n = p.integer("n_molecules");
      const CountModel binomial{CountKind::Binomial, n, prob};
      const CountModel poisson{CountKind::Poisson, n, prob};
      const CountModel gaussian{CountKind::Gaussian, n, prob};
      std::sort(sample.begin(), sample.end());
      const auto k_max = std::max<std::int64_t>(
          sample.back(), static_cast<std::int64_t>(std::ceil(binomial.mean() + 6.0 * std::sqrt(binomial.mean() + 1.0))));
      std::size_t below = 0;
      for (std::int64_t k = 0; k <= std::min(k_max, n); ++k) {
        while (below < sample.size() && sample[below] <= k) ++below;
        cdf_csv.row({c.distance, label, start, end, k, static_cast<double>(below) / static_cast<double>(reps),
                     count_cdf(binomial, k), count_cdf(poisson, k), count_cdf(gaussian, k)});
      }
      for (const CountModel& m : {binomial, poisson, gaussian})
        ks_csv.row({c.distance, label, start, end, std::string(to_string(m.kind)), ks_distance(sample, m)});
    }
  }
}

void fig4_pe_vs_tau(const Params& p, Outputs& out) {
  Csv& pe = out.add("pe_vs_tau.csv", {"distance", "half_life", "ts", "tau", "pe0", "pe1", "pe", "source"});
  Csv& ci = out.add("simulation_ci.csv", {"distance", "half_life", "ts", "tau", "pe0_lo", "pe0_hi", "pe1_lo", "pe1_hi",
                                          "pe_lo", "pe_hi"});
  const auto taus = threshold_range(p);
  const bool gaussian = p.choice("count_model", {"poisson", "gaussian"}) == "gaussian";
  const std::int64_t n_bits = p.integer("n_bits");
  for (const Curve& c : curves(p)) {
    const std::string label = half_life_label(c.half_life);
    for (double ts : p.grid("symbol_duration")) {
      const LinkConfig link = p.link(c.channel, ts);
      const ChannelResponseTable table = build_response_table(link);
      out.notes.push_back(describe(c) + " ts=" + detail::format_real(ts) + ": memory " +
                          std::to_string(table.memory()) + " slots, residual " + detail::format_real(table.residual));
      if (gaussian) {
        const ConvergenceOptions mc{p.integer("mc_sequences"), p.integer("mc_length"), p.real("mc_tol")};
        const auto profiles = average_error_profiles(link, table, taus, mc, p.seed(), CountKind::Gaussian);
        for (std::size_t i = 0; i < taus.size(); ++i)
          pe.row({c.distance, label, ts, taus[i], profiles[i].pe0, profiles[i].pe1, profiles[i].pe, "gaussian"});
      } else {
        const auto profiles =
            StationaryErrorModel(table, link.n1, link.n0).profiles(link.pi1, static_cast<std::int64_t>(taus.back()));
        for (std::int64_t tau : taus) {
          const ErrorProfile& e = profiles[static_cast<std::size_t>(tau)];
          pe.row({c.distance, label, ts, tau, e.pe0, e.pe1, e.pe, "model"});
        }
      }
      if (n_bits == 0) continue;
      const LinkSimulation sim = simulate_link(link, table, n_bits, p.seed(), taus);
      for (const SimulatedProfile& s : sim.profiles) {
        pe.row({c.distance, label, ts, s.tau, s.profile.pe0, s.profile.pe1, s.profile.pe, "simulation"});
        ci.row({c.distance, label, ts, s.tau, s.pe0_ci.lo, s.pe0_ci.hi, s.pe1_ci.lo, s.pe1_ci.hi, s.pe_ci.lo,
                s.pe_ci.hi});
      }
    }
  }
}

void fig5_peak_time(const Params& p, Outputs& out) {
  Csv& csv = out.add("peak_time.csv", {"distance", "half_life", "t_peak_s"});
  for (const Curve& c : curves(p)) csv.row({c.distance, half_life_label(c.half_life), peak_time(c.channel)});
}

void fig6_peak_amp(const Params& p, Outputs& out) {
  Csv& csv = out.add("peak_amp.csv", {"distance", "half_life", "n_peak"});
  const PeakAmplitudeMode mode = p.choice("peak_mode", {"midpoint", "exact"}) == "midpoint"
                                     ? PeakAmplitudeMode::Midpoint
                                     : PeakAmplitudeMode::ExactIntegral;
  const PeakWindow window{p.real("peak_window")};
  const auto n = static_cast<double>(p.integer("n_molecules"));
  for (const Curve& c : curves(p))
    csv.row({c.distance, half_life_label(c.half_life), peak_amplitude(c.channel, window, n, mode)});
}

void fig7_roc(const Params& p, Outputs& out) {
  Csv& csv = out.add("roc.csv", {"distance", "half_life", "ts", "tau", "pf", "pd"});
  const auto taus = threshold_range(p);
  for (const Curve& c : curves(p)) {
    for (double ts : p.grid("symbol_duration")) {
      for (const RocPoint& r : roc_curve(p.link(c.channel, ts), taus))
        csv.row({c.distance, half_life_label(c.half_life), ts, r.tau, r.pf, r.pd});
    }
  }
}

void fig8_itr(const Params& p, Outputs& out) {
  Csv& csv = out.add("itr.csv", {"distance", "half_life", "t", "itr"});
  const auto times = p.grid("time");
  for (const Curve& c : curves(p)) {
    for (double t : times) csv.row({c.distance, half_life_label(c.half_life), t, isi_fraction(c.channel, t)});
  }
}

void fig9_ber(const Params& p, Outputs& out) {
  Csv& csv = out.add("ber.csv", {"distance", "ts", "half_life", "ber", "tau_star"});
  const auto durations = p.grid("symbol_duration");
  for (const Curve& c : curves(p)) {
    std::vector<BerResult> results(durations.size());
    parallel_for(durations.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) results[i] = ber(p.link(c.channel, durations[i]));
    });
    for (std::size_t i = 0; i < durations.size(); ++i)
      csv.row({c.distance, durations[i], half_life_label(c.half_life), results[i].ber, results[i].tau_star});
  }
}

void capacity_row(Csv& csv, const Curve& c, const CapacityResult& r) {
  csv.row({c.distance, half_life_label(c.half_life), r.c_bits, r.c_bps, r.tau, r.pi1, r.ts});
}

// Each sweep is scored separately; unconverged grid points are listed.
template <class Emit>
void capacity_sweeps(const Params& p, Outputs& out, Emit emit) {
  Csv& skipped = out.add("skipped.csv", {"distance", "half_life", "ts"});
  const CapacityOptions options = capacity_options(p);
  const auto durations = p.grid("symbol_duration");
  for (const Curve& c : curves(p)) {
    CapacitySweep sweep;
    try {
      sweep = capacity(c.channel, p.integer("n1"), durations, options);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(describe(c) + ": " + e.what());
    }
    for (double ts : sweep.skipped_ts) skipped.row({c.distance, half_life_label(c.half_life), ts});
    if (!sweep.skipped_ts.empty())
      out.notes.push_back(describe(c) + ": " + std::to_string(sweep.skipped_ts.size()) +
                          " symbol durations skipped, memory above memory_cap");
    emit(c, sweep);
  }
}

void fig10_capacity_ts(const Params& p, Outputs& out) {
  Csv& points = out.add("capacity.csv", {"distance", "half_life", "c_bits", "c_bps", "tau", "pi1", "ts"});
  Csv& best = out.add("capacity_best.csv", {"distance", "half_life", "c_bits", "c_bps", "tau", "pi1", "ts"});
  capacity_sweeps(p, out, [&](const Curve& c, const CapacitySweep& s) {
    for (const CapacityResult& r : s.points) capacity_row(points, c, r);
    capacity_row(best, c, s.best);
  });
}

void fig11_capacity_distance(const Params& p, Outputs& out) {
  Csv& best = out.add("capacity.csv", {"distance", "half_life", "c_bits", "c_bps", "tau", "pi1", "ts"});
  capacity_sweeps(p, out, [&](const Curve& c, const CapacitySweep& s) { capacity_row(best, c, s.best); });
}

void custom(const Params& p, Outputs& out) {
  Csv& link_csv = out.add("link.csv", {"distance", "half_life", "ts", "memory", "residual", "threshold", "pe0", "pe1",
                                       "pe"});
  Csv& ber_csv = out.add("ber.csv", {"distance", "ts", "half_life", "ber", "tau_star"});
  Csv& cap_csv = out.add("capacity.csv", {"distance", "half_life", "c_bits", "c_bps", "tau", "pi1", "ts"});
  const CapacityOptions options = capacity_options(p);
  for (const Curve& c : curves(p)) {
    const std::string label = half_life_label(c.half_life);
    for (double ts : p.grid("symbol_duration")) {
      const LinkConfig link = p.link(c.channel, ts);
      const ChannelResponseTable table = build_response_table(link);
      const auto profiles = StationaryErrorModel(table, link.n1, link.n0).profiles(link.pi1, link.threshold);
      const ErrorProfile& e = profiles[static_cast<std::size_t>(link.threshold)];
      link_csv.row({c.distance, label, ts, table.memory(), table.residual, link.threshold, e.pe0, e.pe1, e.pe});
      const BerResult b = ber_from_profiles(profiles);
      ber_csv.row({c.distance, ts, label, b.ber, b.tau_star});
      capacity_row(cap_csv, c, capacity_for_table(table, link.n1, options));
    }
  }
}

const std::map<std::string, std::function<void(const Params&, Outputs&)>, std::less<>> kRunners = {
    {"fig1-hitmap", fig1_hitmap},
    {"fig2-arrival", fig2_arrival},
    {"fig4-pe-vs-tau", fig4_pe_vs_tau},
    {"fig5-peak-time", fig5_peak_time},
    {"fig6-peak-amp", fig6_peak_amp},
    {"fig7-roc", fig7_roc},
    {"fig8-itr", fig8_itr},
    {"fig9-ber", fig9_ber},
    {"fig10-capacity-ts", fig10_capacity_ts},
    {"fig11-capacity-distance", fig11_capacity_distance},
    {"custom", custom},
};

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  f.close();
  if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string_view library_version() { return MCVD_VERSION; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["version"] = version;
  j["threads"] = threads;
  j["wall_time_s"] = wall_time_s;
  j["config"] = config;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const OutputRecord& o : outputs)
    j["outputs"].push_back({{"file", o.file}, {"sha256", o.sha256}, {"bytes", o.bytes}, {"rows", o.rows}});
  j["notes"] = notes;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    m.experiment = j.at("experiment").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.threads = j.at("threads").get<unsigned>();
    m.wall_time_s = j.at("wall_time_s").get<double>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    for (const auto& o : j.at("outputs"))
      m.outputs.push_back({o.at("file").get<std::string>(), o.at("sha256").get<std::string>(),
                           o.at("bytes").get<std::uint64_t>(), o.at("rows").get<std::uint64_t>()});
    m.notes = j.at("notes").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
}

RunManifest run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::string problems;
  for (const Diagnostic& d : validate(config)) {
    if (d.is_error()) problems += (problems.empty() ? "" : "\n") + d.message;
  }
  if (!problems.empty()) throw ConfigError(problems);

  const Params params(resolved_parameters(config));
  Outputs outputs;
  try {
    kRunners.at(config.experiment)(params, outputs);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }

  RunManifest m;
  m.experiment = config.experiment;
  m.config = params.values();
  m.version = std::string(library_version());
  m.threads = worker_count();
  m.notes = outputs.notes;

  try {
    std::filesystem::create_directories(config.out_dir);
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(std::string("cannot create output directory: ") + e.what());
  }
  for (const Csv& csv : outputs.files) {
    write_file(config.out_dir / csv.name(), csv.body());
    m.outputs.push_back({csv.name(), sha256_hex(csv.body()), csv.body().size(), csv.rows()});
  }
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(config.out_dir / "manifest.json", m.to_json());
  return m;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const ConvergenceError*>(&e)) return kExitConvergence;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitIo;
  return 1;
}

}  // namespace mcvd
