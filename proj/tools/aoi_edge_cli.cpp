#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "aoi_edge/errors.hpp"
#include "aoi_edge/experiments.hpp"

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::stringstream cell(item);
    T value{};
    if (!(cell >> value) || !(cell >> std::ws).eof()) {
      throw aoi_edge::ConfigError({std::string(flag) + ": cannot parse '" + item + "'"});
    }
    out.push_back(value);
  }
  if (out.empty()) throw aoi_edge::ConfigError({std::string(flag) + ": empty list"});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-of-information status update control: planning, learning and simulation"};
  app.set_version_flag("--version", std::string(aoi_edge::build_id()));
  app.require_subcommand(1, 1);

  std::string config, out, scale, policy, max_commands, param, values, from;
  std::uint64_t seed = 0;
  int workers = 0, bth = 0;
  bool trace = false;

  app.add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "base random seed");
  app.add_option("--out", out, "output directory (AOI_EDGE_OUT overrides)");
  app.add_option("--scale", scale, "schedule preset")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--policy", policy, "simulate: via, greedy, greedy-threshold or random");
  app.add_option("--bth", bth, "battery threshold of greedy-threshold")->check(CLI::NonNegativeNumber);
  app.add_option("--M", max_commands, "coupled: transmission limit(s), e.g. 2 or 1,2,3");
  app.add_option("--param", param, "sweep: lambda or xi");
  app.add_option("--values", values, "sweep: comma-separated values");
  app.add_option("--from", from, "export-policy: policy JSON to re-import");
  app.add_flag("--trace", trace, "simulate: write a compressed per-slot trace of episode 0");

  const std::vector<std::pair<const char*, const char*>> modes{
      {"solve-via", "solve every sensor with value iteration and export policies"},
      {"train-q", "run online Q-learning and export learning curves"},
      {"simulate", "simulate a policy and report average costs"},
      {"coupled", "compare policies under a per-slot transmission limit"},
      {"sweep", "solve one sensor over a range of harvest or channel rates"},
      {"export-policy", "export solved policies or re-import one"},
  };
  for (const auto& [name, help] : modes) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : aoi_edge::exit_code::config;
  }

  aoi_edge::CliOverrides overrides;
  try {
    overrides.mode = aoi_edge::parse_experiment_mode(app.get_subcommands().front()->get_name());
    if (app.count("--seed")) overrides.seed = seed;
    if (app.count("--out")) overrides.output = out;
    if (app.count("--scale")) overrides.scale = aoi_edge::parse_scale_preset(scale);
    if (app.count("--workers")) overrides.workers = workers;
    if (app.count("--policy")) overrides.policy = policy;
    if (app.count("--bth")) overrides.battery_threshold = bth;
    if (app.count("--M")) overrides.max_commands = parse_list<int>(max_commands, "--M");
    if (app.count("--param")) overrides.sweep_param = param;
    if (app.count("--values")) overrides.sweep_values = parse_list<double>(values, "--values");
    if (app.count("--from")) overrides.import_from = from;
    if (trace) overrides.trace = true;
  } catch (const aoi_edge::ConfigError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& issue : e.issues()) std::cerr << "  " << issue << '\n';
    return aoi_edge::exit_code::config;
  }

  std::optional<std::filesystem::path> config_path;
  if (!config.empty()) config_path = config;
  return aoi_edge::run_cli(config_path, overrides, std::cout, std::cerr);
}
