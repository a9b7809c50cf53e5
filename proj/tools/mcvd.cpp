// mcvd: run named experiments of the diffusion channel model and write CSV artifacts.

#include "mcvd/cli_runner.hpp"
#include "mcvd/link_bcsk.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

int cmd_list() {
  for (const std::string& name : mcvd::experiment_names()) {
    std::cout << "[" << name << "]\n";
    for (const auto& [key, value] : mcvd::default_parameters(name)) std::cout << "  " << key << " = " << value << "\n";
    std::cout << "\n";
  }
  std::cout << "parameters:\n";
  for (const mcvd::ParamSpec& p : mcvd::parameter_specs()) std::cout << "  " << p.key << ": " << p.help << "\n";
  return mcvd::kExitOk;
}

int cmd_validate(const std::string& path, const std::vector<std::string>& sets) {
  mcvd::ExperimentConfig config = mcvd::load_config(path);
  for (const auto& s : sets) mcvd::apply_assignment(config, s);
  const auto diagnostics = mcvd::validate(config);
  bool failed = false;
  for (const auto& d : diagnostics) {
    std::cout << (d.is_error() ? "error: " : "warning: ") << d.message << "\n";
    failed = failed || d.is_error();
  }
  if (diagnostics.empty()) std::cout << "ok\n";
  return failed ? mcvd::kExitConfig : mcvd::kExitOk;
}

int cmd_run(const std::string& experiment, const std::string& config_path, const std::vector<std::string>& sets,
            const std::string& out, const std::string& seed) {
  mcvd::ExperimentConfig config;
  if (!config_path.empty()) {
    config = mcvd::load_config(config_path);
    if (config.experiment != "custom" && config.experiment != experiment)
      throw mcvd::ConfigError("config file is for experiment '" + config.experiment + "', not '" + experiment + "'");
  }
  if (!mcvd::is_experiment(experiment)) throw mcvd::ConfigError("unknown experiment '" + experiment + "'");
  config.experiment = experiment;
  for (const auto& s : sets) mcvd::apply_assignment(config, s);
  if (!seed.empty()) mcvd::apply_assignment(config, "seed=" + seed);
  config.out_dir = out.empty() ? std::filesystem::path("mcvd-out") / experiment : std::filesystem::path(out);

  for (const auto& d : mcvd::validate(config)) {
    if (!d.is_error()) std::cerr << "warning: " << d.message << "\n";
  }
  const mcvd::RunManifest m = mcvd::run(config);
  for (const auto& o : m.outputs)
    std::cout << (config.out_dir / o.file).string() << "  " << o.rows << " rows  sha256 " << o.sha256 << "\n";
  for (const auto& n : m.notes) std::cout << "note: " << n << "\n";
  std::cout << "manifest: " << (config.out_dir / "manifest.json").string() << "  (" << m.wall_time_s << " s)\n";
  return mcvd::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion channel with molecular degradation: experiment runner"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List experiments and their default parameters");

  std::string validate_path;
  std::vector<std::string> validate_sets;
  auto* validate = app.add_subcommand("validate", "Check a key=value config file without running it");
  validate->add_option("config", validate_path, "Config file")->required();
  validate->add_option("--set", validate_sets, "Override key=value");

  std::string experiment, config_path, out, seed;
  std::vector<std::string> sets;
  auto* run = app.add_subcommand("run", "Run an experiment and write CSV files plus manifest.json");
  run->add_option("experiment", experiment, "Experiment name (see 'mcvd list')")->required();
  run->add_option("--config", config_path, "key=value config file");
  run->add_option("--set", sets, "Override key=value (repeatable)");
  run->add_option("--out", out, "Output directory (default mcvd-out/<experiment>)");
  run->add_option("--seed", seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mcvd::kExitConfig;
  }

  try {
    if (*list) return cmd_list();
    if (*validate) return cmd_validate(validate_path, validate_sets);
    return cmd_run(experiment, config_path, sets, out, seed);
  } catch (const std::exception& e) {
    std::cerr << "mcvd: " << e.what() << "\n";
    return mcvd::exit_code_for(e);
  }
}
