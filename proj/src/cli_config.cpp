#include "cli_params.hpp"

#include "mcvd/channel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mcvd {
namespace {

const std::vector<std::string> kExperiments = {
    "fig1-hitmap",       "fig2-arrival",  "fig4-pe-vs-tau", "fig5-peak-time",
    "fig6-peak-amp",     "fig7-roc",      "fig8-itr",       "fig9-ber",
    "fig10-capacity-ts", "fig11-capacity-distance", "custom",
};

const std::vector<ParamSpec> kParams = {
    {"receiver_radius", "10", "r_r, receiver radius (um)"},
    {"distance", "4", "d = r_0 - r_r, surface distance (um); list or grid"},
    {"tx_center_distance", "", "r_0 (um); when set, replaces the distance list by r_0 - r_r"},
    {"diffusion_coeff", "79.4", "D (um^2/s)"},
    {"half_life", "0.016", "molecule half-life (s), 'inf' for none; list"},
    {"symbol_duration", "0.06", "t_s (s); list or grid"},
    {"n1", "1000", "molecules released for bit-1"},
    {"n0", "0", "molecules released for bit-0"},
    {"threshold", "15", "detection threshold tau; decide 1 iff count > tau"},
    {"pi1", "0.5", "prior of bit-1"},
    {"memory", "auto", "response slots kept, or 'auto'"},
    {"residual_eps", "1e-6", "response residual that ends the automatic memory"},
    {"memory_cap", "10000", "largest automatic memory before a convergence error"},
    {"tau_max", "50", "largest threshold in threshold sweeps"},
    {"count_model", "poisson", "model curve count law: poisson or gaussian"},
    {"mc_sequences", "64", "sequences in the Monte Carlo sequence average (gaussian model)"},
    {"mc_length", "2000", "symbols per sequence in the Monte Carlo sequence average"},
    {"mc_tol", "1e-5", "stability required of the running averages; 0 runs the full length"},
    {"n_bits", "100000", "bits sent in the link simulation; 0 skips it"},
    {"n_molecules", "100000", "molecules per simulated burst"},
    {"step_dt", "1e-6", "Brownian step (s)"},
    {"horizon", "0.2", "simulated time (s)"},
    {"degradation_sampling", "lifetime", "lifetime or per-step"},
    {"sampler", "brownian", "brownian (step simulation) or first-passage (exact hit-time law)"},
    {"bin_width", "0.001", "histogram bin width (s)"},
    {"peak_window", "1e-6", "xi, window centered at the peak time (s)"},
    {"peak_mode", "midpoint", "midpoint or exact peak-amplitude window"},
    {"time", "lin:0:0.2:201", "time grid (s)"},
    {"windows", "0:0.4,4:4.2", "count windows start:end (s)"},
    {"replications", "5000", "independent bursts per count window"},
    {"prior", "auto", "bit-1 prior for capacity, or 'auto' to optimize it"},
    {"prior_grid", "33", "grid points seeding the prior search"},
    {"skip_unconverged", "false", "leave out symbol durations whose memory exceeds memory_cap"},
    {"seed", "1", "random seed"},
};

const std::map<std::string, std::vector<std::pair<std::string, std::string>>, std::less<>> kExperimentDefaults = {
    {"fig1-hitmap", {{"half_life", "inf,0.128,0.016"}}},
    {"fig2-arrival", {{"half_life", "inf"}, {"n_molecules", "2000"}, {"sampler", "first-passage"}}},
    {"fig4-pe-vs-tau", {}},
    {"fig5-peak-time", {{"distance", "lin:1:50:50"}, {"half_life", "inf,0.128,0.064,0.032,0.016,0.008"}}},
    {"fig6-peak-amp",
     {{"distance", "lin:1:50:50"}, {"half_life", "inf,0.128,0.064,0.032,0.016,0.008"}, {"n_molecules", "1"}}},
    {"fig7-roc", {{"half_life", "0.008,0.016,0.064,0.128"}, {"symbol_duration", "0.03,0.04"}}},
    {"fig8-itr", {{"half_life", "0.016,0.032,0.064,0.128,inf"}}},
    {"fig9-ber", {{"half_life", "0.001,0.002,0.004,0.008,0.016,0.032"}, {"symbol_duration", "lin:0.01:0.1:91"}}},
    {"fig10-capacity-ts",
     {{"half_life", "0.001,0.002,0.004,0.008,0.016,0.032,0.064,0.128,1.024"},
      {"symbol_duration", "log:0.001:1:40"},
      {"skip_unconverged", "true"}}},
    {"fig11-capacity-distance",
     {{"distance", "1,2,4,8,16,32,50"},
      {"half_life", "0.0005,0.002,0.008,0.032,0.128,1.024"},
      {"symbol_duration", "log:0.001:1:40"},
      {"skip_unconverged", "true"}}},
    {"custom", {}},
};

bool is_key(std::string_view key) {
  return std::any_of(kParams.begin(), kParams.end(), [&](const ParamSpec& p) { return p.key == key; });
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

double to_real(const std::string& key, std::string_view s) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    bad_value(key, "expected a number, got '" + std::string(s) + "'");
  if (!std::isfinite(x)) bad_value(key, "expected a finite number, got '" + std::string(s) + "'");
  return x;
}

std::int64_t to_integer(const std::string& key, std::string_view s) {
  std::int64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    bad_value(key, "expected an integer, got '" + std::string(s) + "'");
  return x;
}

void check_assignment_key(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "experiment") {
    if (!is_experiment(value)) throw ConfigError("unknown experiment '" + value + "'");
    config.experiment = value;
    return;
  }
  if (!is_key(key)) throw ConfigError("unknown key '" + key + "'");
  config.overrides[key] = value;
}

}  // namespace

const std::vector<std::string>& experiment_names() { return kExperiments; }

bool is_experiment(std::string_view name) {
  return std::find(kExperiments.begin(), kExperiments.end(), name) != kExperiments.end();
}

const std::vector<ParamSpec>& parameter_specs() { return kParams; }

std::vector<std::pair<std::string, std::string>> default_parameters(std::string_view experiment) {
  const auto it = kExperimentDefaults.find(experiment);
  if (it == kExperimentDefaults.end()) throw ConfigError("unknown experiment '" + std::string(experiment) + "'");
  std::vector<std::pair<std::string, std::string>> out;
  for (const ParamSpec& p : kParams) {
    std::string value = p.default_value;
    for (const auto& [k, v] : it->second) {
      if (k == p.key) value = v;
    }
    out.emplace_back(p.key, value);
  }
  return out;
}

std::map<std::string, std::string> resolved_parameters(const ExperimentConfig& config) {
  std::map<std::string, std::string> values;
  for (auto& [k, v] : default_parameters(config.experiment)) values[k] = v;
  for (const auto& [k, v] : config.overrides) {
    if (!is_key(k)) throw ConfigError("unknown key '" + k + "'");
    values[k] = v;
  }
  return values;
}

void apply_assignment(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  const std::string key(trim(assignment.substr(0, eq)));
  const std::string value(trim(assignment.substr(eq + 1)));
  if (key.empty()) throw ConfigError("empty key in '" + std::string(assignment) + "'");
  check_assignment_key(config, key, value);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::vector<std::string> problems;
  std::size_t line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    try {
      apply_assignment(config, line);
    } catch (const ConfigError& e) {
      problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "\n") + p;
    throw ConfigError(msg);
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

namespace detail {

std::string format_real(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string half_life_label(const HalfLife& h) { return h.is_infinite() ? "inf" : format_real(h.value()); }

const std::string& Params::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key + ": missing");
  return it->second;
}

double Params::real(const std::string& key) const { return to_real(key, text(key)); }

std::int64_t Params::integer(const std::string& key) const { return to_integer(key, text(key)); }

bool Params::flag(const std::string& key) const {
  const std::string& v = text(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, "expected true or false, got '" + v + "'");
}

std::vector<double> Params::grid(const std::string& key) const {
  const std::string& v = text(key);
  if (v.rfind("lin:", 0) == 0 || v.rfind("log:", 0) == 0) {
    const auto parts = split(v, ':');
    if (parts.size() != 4) bad_value(key, "grid must read lin:lo:hi:n or log:lo:hi:n");
    const double lo = to_real(key, parts[1]);
    const double hi = to_real(key, parts[2]);
    const std::int64_t n = to_integer(key, parts[3]);
    if (n < 1) bad_value(key, "grid needs at least one point");
    if (hi < lo) bad_value(key, "grid needs lo <= hi");
    const bool log = parts[0] == "log";
    if (log && !(lo > 0.0)) bad_value(key, "log grid needs lo > 0");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      const double w = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      out[static_cast<std::size_t>(i)] = log ? lo * std::pow(hi / lo, w) : lo + (hi - lo) * w;
    }
    out.back() = hi;
    if (n == 1) out.back() = lo;
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(to_real(key, item));
  return out;
}

std::vector<HalfLife> Params::half_lives() const {
  std::vector<HalfLife> out;
  for (const auto& item : split(text("half_life"), ',')) {
    if (item == "inf") {
      out.push_back(HalfLife::infinite());
      continue;
    }
    const double v = to_real("half_life", item);
    if (!(v > 0.0)) bad_value("half_life", "must be positive or 'inf', got " + item);
    out.push_back(HalfLife::seconds(v));
  }
  return out;
}

std::uint64_t Params::seed() const {
  const std::int64_t s = integer("seed");
  if (s < 0) bad_value("seed", "must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

std::int64_t Params::memory() const {
  if (text("memory") == "auto") return kAutoMemory;
  const std::int64_t m = integer("memory");
  if (m < 1) bad_value("memory", "must be a positive slot count or 'auto'");
  return m;
}

std::optional<double> Params::prior() const {
  if (text("prior") == "auto") return std::nullopt;
  const double p = real("prior");
  if (!(p > 0.0 && p < 1.0)) bad_value("prior", "must lie in (0, 1) or be 'auto'");
  return p;
}

std::vector<Window> Params::windows() const {
  std::vector<Window> out;
  for (const auto& item : split(text("windows"), ',')) {
    const auto ends = split(item, ':');
    if (ends.size() != 2) bad_value("windows", "expected start:end, got '" + item + "'");
    const Window w{to_real("windows", ends[0]), to_real("windows", ends[1])};
    if (!(w.start >= 0.0 && w.end > w.start)) bad_value("windows", "need 0 <= start < end in '" + item + "'");
    out.push_back(w);
  }
  return out;
}

std::vector<double> Params::distances() const {
  if (!text("tx_center_distance").empty()) return {real("tx_center_distance") - real("receiver_radius")};
  return grid("distance");
}

const std::string& Params::choice(const std::string& key, std::initializer_list<const char*> allowed) const {
  const std::string& v = text(key);
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return v;
    list += (list.empty() ? "" : ", ") + std::string(a);
  }
  bad_value(key, "expected one of " + list + ", got '" + v + "'");
}

ChannelSpec Params::channel(double distance, const HalfLife& half_life) const {
  const double rr = real("receiver_radius");
  return {rr, rr + distance, real("diffusion_coeff"), degradation_rate_from_half_life(half_life)};
}

LinkConfig Params::link(const ChannelSpec& channel, double symbol_duration) const {
  LinkConfig c;
  c.channel = channel;
  c.symbol_duration = symbol_duration;
  c.n1 = integer("n1");
  c.n0 = integer("n0");
  c.threshold = integer("threshold");
  c.pi1 = real("pi1");
  c.memory = memory();
  c.residual_eps = real("residual_eps");
  return c;
}

SimConfig Params::sim(const ChannelSpec& channel) const {
  SimConfig c;
  c.channel = channel;
  c.n_molecules = integer("n_molecules");
  c.step_dt = real("step_dt");
  c.horizon = real("horizon");
  c.seed = seed();
  c.degradation = choice("degradation_sampling", {"lifetime", "per-step"}) == "lifetime"
                      ? DegradationSampling::Lifetime
                      : DegradationSampling::PerStep;
  return c;
}

}  // namespace detail

std::vector<Diagnostic> validate(const ExperimentConfig& config) {
  std::vector<Diagnostic> out;
  auto error = [&](const std::string& m) { out.push_back({Diagnostic::Severity::Error, m}); };
  auto warning = [&](const std::string& m) { out.push_back({Diagnostic::Severity::Warning, m}); };
  auto check = [&](auto&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      error(e.what());
    }
  };

  if (!is_experiment(config.experiment)) {
    error("unknown experiment '" + config.experiment + "'");
    return out;
  }
  std::map<std::string, std::string> values;
  try {
    values = resolved_parameters(config);
  } catch (const std::exception& e) {
    error(e.what());
    return out;
  }
  const detail::Params p(values);

  if (config.overrides.count("tx_center_distance") && config.overrides.count("distance"))
    error("tx_center_distance: cannot be combined with distance");

  std::vector<double> distances;
  std::vector<HalfLife> half_lives;
  std::vector<double> durations;
  check([&] { distances = p.distances(); });
  check([&] { half_lives = p.half_lives(); });
  check([&] { durations = p.grid("symbol_duration"); });
  check([&] {
    for (double ts : durations) {
      if (!(ts > 0.0)) throw ConfigError("symbol_duration: must be positive");
    }
  });

  // channel invariants, once per distinct message
  std::vector<std::string> seen;
  auto once = [&](const std::string& m) {
    if (std::find(seen.begin(), seen.end(), m) == seen.end()) {
      seen.push_back(m);
      error(m);
    }
  };
  for (double d : distances) {
    try {
      p.channel(d, HalfLife::infinite()).validate();
    } catch (const std::exception& e) {
      once(e.what());
    }
  }

  const ChannelSpec reference = [&] {
    try {
      return p.channel(4.0, HalfLife::infinite());
    } catch (const std::exception&) {
      return ChannelSpec{};
    }
  }();
  for (const char* key : {"n1", "n0", "threshold", "memory_cap", "tau_max", "n_bits", "n_molecules", "replications",
                          "prior_grid", "mc_sequences", "mc_length"})
    check([&] { p.integer(key); });
  for (const char* key : {"receiver_radius", "diffusion_coeff", "pi1", "mc_tol", "residual_eps", "step_dt", "horizon",
                          "bin_width", "peak_window"})
    check([&] { p.real(key); });
  check([&] { p.memory(); });
  check([&] { p.link(reference, durations.empty() ? 0.06 : durations.front()).validate(); });
  check([&] {
    const SimConfig sim = p.sim(reference);
    sim.validate();
    for (const auto& w : sim.warnings()) warning("step_dt: " + w);
  });
  check([&] {
    if (p.real("residual_eps") >= 1.0) throw ConfigError("residual_eps: must be below 1");
  });
  check([&] {
    if (p.integer("memory_cap") < 1) throw ConfigError("memory_cap: must be at least 1");
  });
  check([&] {
    if (p.integer("tau_max") < 0) throw ConfigError("tau_max: must be nonnegative");
  });
  check([&] { p.choice("count_model", {"poisson", "gaussian"}); });
  check([&] {
    if (p.integer("mc_sequences") < 1 || p.integer("mc_length") < 1)
      throw ConfigError("mc_sequences, mc_length: must be at least 1");
  });
  check([&] {
    if (p.integer("n_bits") < 0) throw ConfigError("n_bits: must be nonnegative");
  });
  check([&] { p.choice("sampler", {"brownian", "first-passage"}); });
  check([&] {
    if (!(p.real("bin_width") > 0.0)) throw ConfigError("bin_width: must be positive");
  });
  check([&] {
    if (!(p.real("peak_window") > 0.0)) throw ConfigError("peak_window: must be positive");
  });
  check([&] { p.choice("peak_mode", {"midpoint", "exact"}); });
  check([&] {
    for (double t : p.grid("time")) {
      if (t < 0.0) throw ConfigError("time: must be nonnegative");
    }
  });
  check([&] { p.windows(); });
  check([&] {
    if (p.integer("replications") < 1) throw ConfigError("replications: must be at least 1");
  });
  check([&] { p.prior(); });
  check([&] {
    if (p.integer("prior_grid") < 3) throw ConfigError("prior_grid: must be at least 3");
  });
  check([&] { p.flag("skip_unconverged"); });
  check([&] { p.seed(); });
  return out;
}

}  // namespace mcvd
