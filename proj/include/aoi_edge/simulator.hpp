#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aoi_edge/finite_mdp.hpp"
#include "aoi_edge/observation.hpp"
#include "aoi_edge/sensor_model.hpp"

namespace aoi_edge {

/// Uniform [0,1) draws consumed by one sensor in one slot.
struct SlotDraws {
  double channel = 0.0;
  double harvest = 0.0;
  double request = 0.0;
};

/// Per-sensor record of one slot.
struct SensorSlot {
  bool request = false;
  bool command = false;
  bool tx = false;
  bool success = false;
  bool harvest = false;
  int battery_before = 0;
  int aoi_after = 1;
  double cost = 0.0;
};

struct SlotTrace {
  std::int64_t slot = 0;
  std::vector<SensorSlot> sensors;

  double total_cost() const noexcept;
};

struct SensorAdvance {
  SensorState next;
  SensorSlot slot;
};

/// One slot of the sensor protocol in fixed order: command, transmission
/// gate, channel, harvest, battery, AoI, cost, next request. A draw u
/// succeeds with probability p when u < p.
SensorAdvance advance_sensor(const SensorState& s, Command a, const SensorParams& params,
                             const SlotDraws& draws);

/// Throws ContractError when a record breaks the slot invariants.
void check_slot(const SensorSlot& slot, const SensorParams& params);

struct InitialConditions {
  int battery = -1;  // < 0: full battery
  int aoi = 1;
  int belief = -1;  // partial-mode battery belief before any update; < 0: capacity
};

struct EnvConfig {
  std::vector<SensorParams> sensors;
  std::int64_t horizon = 1'000'000;
  int episodes = 1;
  std::uint64_t seed = 1;
  ObservationMode observation = ObservationMode::exact;
  InitialConditions initial;
  /// One stream per sensor and source when true; a single shared stream otherwise.
  bool common_random_numbers = true;

  std::vector<std::string> violations() const;
  void validate() const;
};

enum class RandomSource : std::uint32_t { request = 0, harvest = 1, channel = 2, policy = 3, exploration = 4 };

/// Engine for one (seed, episode, sensor, source) stream.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t episode, std::uint32_t sensor, RandomSource source);

inline double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// K-sensor environment for a single episode.
class Environment {
 public:
  Environment(const EnvConfig& config, std::uint64_t episode);

  std::size_t num_sensors() const noexcept { return params_.size(); }
  std::int64_t slot() const noexcept { return slot_; }
  ObservationMode mode() const noexcept { return mode_; }
  std::span<const SensorParams> params() const noexcept { return params_; }
  std::span<const SensorState> states() const noexcept { return states_; }
  /// Edge view of every sensor in the configured observation mode.
  std::span<const EdgeObservation> observations() const noexcept { return observations_; }

  /// Applies one joint command vector and returns the slot record.
  const SlotTrace& step(std::span<const Command> actions);

 private:
  std::mt19937_64& engine(std::size_t sensor, RandomSource source);

  std::vector<SensorParams> params_;
  ObservationMode mode_;
  bool shared_stream_;
  std::vector<std::mt19937_64> engines_;
  std::vector<SensorState> states_;
  std::vector<EdgeObservation> observations_;
  std::int64_t slot_ = 0;
  SlotTrace trace_;
};

/// Per-episode mutable state handed to policies (their private RNG stream).
struct PolicyContext {
  std::mt19937_64 rng;
};

/// A (possibly joint) decision rule. Implementations are immutable, so one
/// instance may serve episodes running on several threads.
class JointPolicy {
 public:
  virtual ~JointPolicy() = default;
  virtual std::string name() const = 0;
  virtual void decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const = 0;
};

Command baseline_greedy(const EdgeObservation& obs) noexcept;
Command baseline_greedy_threshold(const EdgeObservation& obs, int battery_threshold) noexcept;
Command baseline_random(const EdgeObservation& obs, std::mt19937_64& rng);

class GreedyPolicy final : public JointPolicy {
 public:
  std::string name() const override { return "greedy"; }
  void decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const override;
};

class GreedyThresholdPolicy final : public JointPolicy {
 public:
  explicit GreedyThresholdPolicy(int battery_threshold) : threshold_(battery_threshold) {}
  std::string name() const override { return "greedy-threshold"; }
  void decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const override;

 private:
  int threshold_;
};

class RandomPolicy final : public JointPolicy {
 public:
  std::string name() const override { return "random"; }
  void decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const override;
};

/// Independent per-sensor lookup tables indexed by the observed state.
class SensorTablePolicy final : public JointPolicy {
 public:
  SensorTablePolicy(std::vector<StateSpace> spaces, std::vector<std::vector<ActionId>> tables,
                    std::string name = "via");

  std::string name() const override { return name_; }
  void decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const override;
  Command action(std::size_t sensor, const EdgeObservation& obs) const;

 private:
  std::vector<StateSpace> spaces_;
  std::vector<std::vector<ActionId>> tables_;
  std::string name_;
};

/// Running average of the cost (sum over slots 1..t divided by t) at
/// checkpoint slots, averaged over episodes.
struct RunningCurve {
  std::vector<std::int64_t> slots;
  std::vector<std::vector<double>> per_sensor;  // [checkpoint][sensor]
  std::vector<double> total;
};

struct CostReport {
  std::string policy;
  std::int64_t horizon = 0;
  int episodes = 0;
  std::vector<double> per_sensor_mean;
  std::vector<double> per_sensor_std_error;
  double total_mean = 0.0;
  double total_std_error = 0.0;
  std::vector<double> episode_totals;
  std::vector<std::vector<double>> episode_per_sensor;
  RunningCurve curve;
};

struct RunOptions {
  int workers = 1;
  /// Slots (1-based counts) at which the running average is recorded.
  std::vector<std::int64_t> checkpoints;
  /// Observer of every slot; forces sequential episodes.
  std::function<void(std::uint64_t episode, const SlotTrace&)> on_slot;
};

/// Executes `episodes` independent episodes of `horizon` slots. Deterministic
/// given the seed and independent of the worker count.
CostReport run_policy(const EnvConfig& config, const JointPolicy& policy, const RunOptions& options = {});

/// Evenly spaced checkpoint slots ending at the horizon.
std::vector<std::int64_t> linear_checkpoints(std::int64_t horizon, std::size_t count);

/// Sample mean and standard error of the mean.
std::pair<double, double> mean_and_std_error(std::span<const double> samples);

}  // namespace aoi_edge
