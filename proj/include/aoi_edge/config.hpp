#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aoi_edge/coupled.hpp"
#include "aoi_edge/io.hpp"
#include "aoi_edge/qlearning.hpp"
#include "aoi_edge/simulator.hpp"
#include "aoi_edge/value_iteration.hpp"

namespace aoi_edge {

enum class ExperimentMode { solve_via, train_q, simulate, coupled, sweep, export_policy };
enum class ScalePreset { paper, desk };

std::string_view to_string(ExperimentMode mode) noexcept;
std::optional<ExperimentMode> parse_experiment_mode(std::string_view text) noexcept;
std::string_view to_string(ScalePreset preset) noexcept;
std::optional<ScalePreset> parse_scale_preset(std::string_view text) noexcept;

/// Schedule values a preset resolves when the config leaves them unset.
struct PresetValues {
  double epsilon_decay;
  std::int64_t alpha_switch;
  std::int64_t horizon;
};
PresetValues preset_values(ScalePreset preset) noexcept;

/// Fully resolved experiment description.
struct ExperimentSpec {
  ExperimentMode mode = ExperimentMode::solve_via;
  ScalePreset scale = ScalePreset::paper;
  EnvConfig env;
  SolverOptions solver;
  LearnerConfig learner;
  std::filesystem::path output = "aoi_edge_out";
  int workers = 1;
  std::size_t checkpoints = 100;
  bool trace = false;

  // simulate
  std::string policy = "via";
  int battery_threshold = 1;

  // coupled
  std::vector<int> max_commands;
  std::size_t state_cap = kDefaultProductStateCap;
  /// "auto" skips the product solve above the cap, "required" fails with a
  /// size-guard error instead, "off" never solves it.
  std::string coupled_optimal = "auto";

  // sweep
  std::string sweep_param = "lambda";
  std::vector<double> sweep_values;

  // export-policy
  std::optional<std::filesystem::path> import_from;

  /// Resolved configuration in config-file form, embedded in artifacts.
  Json resolved;
};

/// Command-line values; each one set overrides the config file.
struct CliOverrides {
  std::optional<ExperimentMode> mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
  std::optional<ScalePreset> scale;
  std::optional<int> workers;
  std::optional<std::string> policy;
  std::optional<int> battery_threshold;
  std::optional<std::vector<int>> max_commands;
  std::optional<std::string> sweep_param;
  std::optional<std::vector<double>> sweep_values;
  std::optional<std::filesystem::path> import_from;
  std::optional<bool> trace;
};

/// Resolves defaults, then the scale preset, then the config document, then
/// the overrides. Every problem is collected with its JSON path and reported
/// in a single ConfigError.
ExperimentSpec validate_config(const Json& config, const CliOverrides& overrides = {});

}  // namespace aoi_edge
