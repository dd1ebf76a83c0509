#pragma once

#include <string_view>

#include "aoi_edge/sensor_model.hpp"

namespace aoi_edge {

/// What the edge node knows about a sensor's battery.
enum class ObservationMode {
  exact,    // current battery level every slot
  partial,  // level carried by the last received status update
};

std::string_view to_string(ObservationMode mode) noexcept;
/// Accepts "exact" or "partial"; throws ContractError otherwise.
ObservationMode parse_observation_mode(std::string_view text);

struct EdgeObservation {
  int battery = 0;
  int aoi = 1;
  bool request = false;

  SensorState as_state() const noexcept { return {battery, aoi, request}; }
  bool operator==(const EdgeObservation&) const = default;
};

/// Edge view after a slot. The AoI and request flag are always exact. In
/// partial mode the battery is replaced only when the slot delivered an
/// update, by `packet_battery` (the level the sensor had when generating it).
EdgeObservation observe(ObservationMode mode, const SensorState& current, const SlotEvents& last,
                        int packet_battery, const EdgeObservation& previous);

}  // namespace aoi_edge
