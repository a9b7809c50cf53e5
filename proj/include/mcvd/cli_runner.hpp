#pragma once

// Batch runner behind the mcvd command line: flat key=value experiment
// configs, named figure reproductions, CSV artifacts and a JSON run manifest.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mcvd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitIo = 4;

/// Malformed config text, unknown key, bad value or violated invariant.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  std::string message;

  bool is_error() const { return severity == Severity::Error; }
};

/// One parameter of the flat config namespace.
struct ParamSpec {
  std::string key;
  std::string default_value;
  std::string help;
};

struct ExperimentConfig {
  std::string experiment = "custom";
  /// Values given in a config file or with --set, by key. Keys are checked on insertion.
  std::map<std::string, std::string> overrides;
  std::filesystem::path out_dir = "mcvd-out";
};

const std::vector<std::string>& experiment_names();
bool is_experiment(std::string_view name);

/// Base parameter table; values are the defaults of the custom experiment.
const std::vector<ParamSpec>& parameter_specs();

/// Effective defaults of an experiment, in parameter_specs() order.
std::vector<std::pair<std::string, std::string>> default_parameters(std::string_view experiment);

/// Defaults of the experiment with the overrides applied.
std::map<std::string, std::string> resolved_parameters(const ExperimentConfig& config);

/// Adds key=value to the overrides. Throws ConfigError on a malformed
/// assignment, an unknown key or an unknown experiment name.
void apply_assignment(ExperimentConfig& config, std::string_view assignment);

/// Parses config text: one key = value per line, '#' starts a comment, the
/// key "experiment" selects the experiment. Every bad line is reported in
/// one ConfigError.
ExperimentConfig parse_config(std::string_view text);

/// parse_config on a file; IoError if it cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

/// All invariant violations and suspicious-regime warnings, without running.
std::vector<Diagnostic> validate(const ExperimentConfig& config);

struct OutputRecord {
  std::string file;  ///< relative to the output directory
  std::string sha256;
  std::uint64_t bytes = 0;
  std::uint64_t rows = 0;  ///< data rows, header excluded
};

struct RunManifest {
  std::string experiment;
  std::map<std::string, std::string> config;  ///< every resolved parameter
  std::string version;
  unsigned threads = 0;
  double wall_time_s = 0.0;
  std::vector<OutputRecord> outputs;
  std::vector<std::string> notes;

  std::string to_json() const;
  /// Inverse of to_json. Throws ConfigError on malformed input.
  static RunManifest from_json(std::string_view text);
};

/// Validates, runs the experiment, writes its CSV files and manifest.json into
/// config.out_dir, and returns the manifest. Throws ConfigError, ConvergenceError
/// or IoError.
RunManifest run(const ExperimentConfig& config);

/// Exit code for an exception escaping run or the config loaders.
int exit_code_for(const std::exception& e);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// Library version string.
std::string_view library_version();

}  // namespace mcvd
