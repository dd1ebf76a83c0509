#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace aoi_edge {

/// Edge-node decision for one sensor in one slot.
enum class Command : std::uint8_t { hold = 0, update = 1 };

constexpr int to_int(Command c) noexcept { return static_cast<int>(c); }
constexpr Command command_from(bool update) noexcept {
  return update ? Command::update : Command::hold;
}

/// Per-sensor constants. Defaults follow the reference setup (B = 15,
/// cap 127, request rate 0.15, unit weight); harvest and channel rates
/// default to the first sensor of the learning experiment.
struct SensorParams {
  int battery_capacity = 15;
  double harvest_prob = 0.04;
  double tx_success_prob = 0.15;
  double request_prob = 0.15;
  int aoi_max = 127;
  double cost_weight = 1.0;

  /// One message per violated bound; empty when the parameters are valid.
  std::vector<std::string> violations() const;
  /// Throws ContractError listing every violation.
  void validate() const;

  bool operator==(const SensorParams&) const = default;
};

/// Battery level, AoI, and request flag of one sensor at the start of a slot.
struct SensorState {
  int battery = 0;
  int aoi = 1;
  bool request = false;

  bool operator==(const SensorState&) const = default;
};

/// Random outcomes of one slot on the sensor side.
struct SlotEvents {
  bool sensor_tx = false;
  bool channel_success = false;
  bool harvest = false;
};

/// Battery after one slot: min(b + e - d, capacity). Transmitting from an
/// empty battery is a ContractError.
int battery_step(int battery, bool harvest, bool tx, int capacity);

/// AoI after one slot: 1 on a received update, otherwise min(aoi + 1, cap).
int aoi_step(int aoi, bool channel_success, int aoi_max);

/// The sensor transmits only when commanded and holding at least one unit.
constexpr bool sensor_tx(Command a, int battery) noexcept {
  return a == Command::update && battery >= 1;
}

/// Cost charged for serving a request with the AoI seen at the end of the slot.
constexpr double immediate_cost(bool request, double weight, int next_aoi) noexcept {
  return request ? weight * static_cast<double>(next_aoi) : 0.0;
}

/// Row-major flattening of (battery, aoi, request): battery slowest, request
/// fastest. Index 0 is (b = 0, aoi = 1, r = 0).
class StateSpace {
 public:
  StateSpace(int battery_capacity, int aoi_max);
  explicit StateSpace(const SensorParams& params)
      : StateSpace(params.battery_capacity, params.aoi_max) {}

  std::size_t size() const noexcept { return size_; }
  int battery_capacity() const noexcept { return battery_capacity_; }
  int aoi_max() const noexcept { return aoi_max_; }

  bool contains(const SensorState& s) const noexcept;
  /// Throws ContractError for states outside the domain.
  std::size_t index(const SensorState& s) const;
  SensorState state(std::size_t index) const;
  std::vector<SensorState> enumerate() const;

  bool operator==(const StateSpace&) const = default;

 private:
  int battery_capacity_;
  int aoi_max_;
  std::size_t size_;
};

struct Successor {
  SensorState state;
  double probability;
};

/// Exact one-slot successor distribution of a sensor under a command.
/// Zero-probability branches are omitted and coinciding successors merged.
/// Commanding a sensor without a pending request is a ContractError.
std::vector<Successor> transition_distribution(const SensorState& s, Command a,
                                               const SensorParams& params);

/// Sparse per-sensor kernel over the flattened state space. Rows for the
/// command action exist only on request states.
class TransitionKernel {
 public:
  struct Entry {
    std::uint32_t next;
    double probability;
  };

  static constexpr std::size_t kMaxSuccessors = 8;
  static constexpr double kStochasticTolerance = 1e-12;

  explicit TransitionKernel(const SensorParams& params);

  const SensorParams& params() const noexcept { return params_; }
  const StateSpace& space() const noexcept { return space_; }

  bool admissible(std::size_t state, Command a) const;
  /// Throws ContractError for an inadmissible (state, action) pair.
  std::span<const Entry> row(std::size_t state, Command a) const;

 private:
  SensorParams params_;
  StateSpace space_;
  std::vector<std::uint32_t> offsets_;  // 2 * states + 1
  std::vector<Entry> entries_;
};

}  // namespace aoi_edge
