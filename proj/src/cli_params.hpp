#pragma once

// Typed access to the resolved string parameters of an experiment config.
// Every parse failure is a ConfigError whose message starts with the key.

#include "mcvd/channel.hpp"
#include "mcvd/cli_runner.hpp"
#include "mcvd/link_bcsk.hpp"
#include "mcvd/particle_sim.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mcvd::detail {

struct Window {
  double start = 0.0;
  double end = 0.0;
};

class Params {
 public:
  explicit Params(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  const std::string& text(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  /// Comma-separated reals, or lin:lo:hi:n / log:lo:hi:n.
  std::vector<double> grid(const std::string& key) const;
  /// Comma-separated half-lives in s; "inf" for no degradation.
  std::vector<HalfLife> half_lives() const;
  std::uint64_t seed() const;
  /// "auto" maps to kAutoMemory.
  std::int64_t memory() const;
  /// Disengaged for "auto".
  std::optional<double> prior() const;
  /// Comma-separated start:end pairs.
  std::vector<Window> windows() const;
  /// Surface distances; a set tx_center_distance replaces the distance grid.
  std::vector<double> distances() const;
  /// One of the listed choices.
  const std::string& choice(const std::string& key, std::initializer_list<const char*> allowed) const;

  ChannelSpec channel(double distance, const HalfLife& half_life) const;
  LinkConfig link(const ChannelSpec& channel, double symbol_duration) const;
  SimConfig sim(const ChannelSpec& channel) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// "inf" or the shortest round-trip decimal of the half-life.
std::string half_life_label(const HalfLife& h);

/// Shortest decimal that parses back to the same double.
std::string format_real(double x);

}  // namespace mcvd::detail
