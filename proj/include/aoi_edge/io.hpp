#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoi_edge/qlearning.hpp"
#include "aoi_edge/sensor_model.hpp"
#include "aoi_edge/simulator.hpp"
#include "aoi_edge/value_iteration.hpp"

namespace aoi_edge {

using Json = nlohmann::json;

/// Identity stamped on every artifact: build, seed and resolved config.
struct Provenance {
  std::string build;
  std::uint64_t seed = 0;
  Json config = Json::object();

  /// Provenance of the running binary.
  static Provenance current(std::uint64_t seed, Json config);
  Json to_json() const;
};

/// Adds the build, seed and config keys to a JSON artifact.
void stamp(Json& doc, const Provenance& provenance);

inline constexpr const char* kIndexOrder = "b-major,aoi,request";

/// Shortest text that reads back as the same double (17 significant digits).
std::string format_real(double value);

Json params_to_json(const SensorParams& p);
/// Throws IoError on missing or mistyped fields.
SensorParams params_from_json(const Json& j);

/// Policy/value export of one sensor.
Json policy_to_json(const SensorParams& params, const SolverOptions& options, const ViaResult& result,
                    const Provenance& provenance);

struct ImportedPolicy {
  SensorParams params;
  SolverOptions options;
  ValueTable value;
  PolicyTable policy;
  Provenance provenance;
};

/// Inverse of policy_to_json; checks table sizes and admissibility.
ImportedPolicy policy_from_json(const Json& j);

Json qtable_to_json(const SensorParams& params, const LearnerConfig& cfg, const QTableLearned& q,
                    const Provenance& provenance);
Json cost_report_to_json(const CostReport& report, const Provenance& provenance);

/// Reads or writes a whole file; failures raise IoError.
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

/// "# key: value" lines that open every CSV artifact.
std::string provenance_header(const Provenance& provenance);

/// Request-slice policy grid: rows aoi = 1..cap, columns battery = 0..B.
std::string policy_grid_csv(const StateSpace& space, std::span<const ActionId> policy, const Provenance& provenance);

/// Columns slot, sensor_1.., total.
std::string running_curve_csv(const RunningCurve& curve, const Provenance& provenance);

struct CoupledRow {
  int max_commands = 0;
  std::string policy;
  double mean_cost = 0.0;
  double std_error = 0.0;
  int episodes = 0;
};

std::string coupled_csv(std::span<const CoupledRow> rows, const Provenance& provenance);

/// Gzip-compressed per-slot CSV (one row per slot and sensor).
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, const Provenance& provenance);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void write(std::uint64_t episode, const SlotTrace& trace);
  /// Flushes and closes; errors surface here rather than in the destructor.
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aoi_edge
