#include "aoi_edge/observation.hpp"

#include <string>

#include "aoi_edge/errors.hpp"

namespace aoi_edge {

std::string_view to_string(ObservationMode mode) noexcept {
  return mode == ObservationMode::exact ? "exact" : "partial";
}

ObservationMode parse_observation_mode(std::string_view text) {
  if (text == "exact") return ObservationMode::exact;
  if (text == "partial") return ObservationMode::partial;
  throw ContractError("unknown observation mode '" + std::string(text) + "'");
}

EdgeObservation observe(ObservationMode mode, const SensorState& current, const SlotEvents& last,
                        int packet_battery, const EdgeObservation& previous) {
  EdgeObservation out{current.battery, current.aoi, current.request};
  if (mode == ObservationMode::partial) {
    out.battery = last.channel_success ? packet_battery : previous.battery;
  }
  return out;
}

}  // namespace aoi_edge
