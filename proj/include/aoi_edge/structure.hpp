#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "aoi_edge/finite_mdp.hpp"
#include "aoi_edge/sensor_model.hpp"
#include "aoi_edge/value_iteration.hpp"

namespace aoi_edge {

/// A (battery, aoi) cell of a policy or value grid.
struct GridPoint {
  int battery = 0;
  int aoi = 1;

  bool operator==(const GridPoint&) const = default;
};

/// Pair of cells (from, to) that breaks a monotonicity claim.
using Witness = std::pair<GridPoint, GridPoint>;

struct ThresholdReport {
  bool aoi_monotone = true;
  bool battery_monotone = true;
  std::optional<Witness> aoi_witness;
  std::optional<Witness> battery_witness;

  bool passed() const noexcept { return aoi_monotone && battery_monotone; }
};

/// Threshold shape of the request slice: a command at (b, aoi) implies a
/// command at every larger aoi and every larger battery.
ThresholdReport check_threshold_structure(const StateSpace& space, std::span<const ActionId> policy);

struct ValueMonotonicityReport {
  bool aoi_nondecreasing = true;
  bool battery_nonincreasing = true;
  /// Request flag of the slice where the witness was found.
  bool witness_request = false;
  std::optional<Witness> aoi_witness;
  std::optional<Witness> battery_witness;

  bool passed() const noexcept { return aoi_nondecreasing && battery_nonincreasing; }
};

/// v non-decreasing in aoi and non-increasing in battery on both request slices.
ValueMonotonicityReport check_value_monotonicity(const StateSpace& space, std::span<const double> v,
                                                 double tolerance = 1e-9);

struct DeltaQReport {
  bool nonincreasing = true;
  std::optional<Witness> witness;
};

/// q(s,update) - q(s,hold) non-increasing in aoi on the request slice.
DeltaQReport check_delta_q_monotone(const StateSpace& space, const QTableExact& q, double tolerance = 1e-9);

/// Request-slice cells where the policy commands, ordered by (battery, aoi).
std::vector<GridPoint> command_region(const StateSpace& space, std::span<const ActionId> policy);

bool region_contains(std::span<const GridPoint> outer, std::span<const GridPoint> inner);

}  // namespace aoi_edge
