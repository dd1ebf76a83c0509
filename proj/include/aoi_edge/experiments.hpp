#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "aoi_edge/config.hpp"

namespace aoi_edge {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int size_guard = 3;
inline constexpr int io = 4;
}  // namespace exit_code

/// Files written by one experiment, in creation order.
struct ExperimentResult {
  std::vector<std::filesystem::path> artifacts;
};

/// Runs the pipeline selected by `spec.mode` and writes its artifacts under
/// `spec.output`. Progress lines go to `log`.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream& log);

/// Loads the optional config file, applies the overrides (and AOI_EDGE_OUT),
/// runs the experiment and maps failures to exit codes.
int run_cli(const std::optional<std::filesystem::path>& config_path, CliOverrides overrides, std::ostream& out,
            std::ostream& err);

}  // namespace aoi_edge
