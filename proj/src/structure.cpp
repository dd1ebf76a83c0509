#include "aoi_edge/structure.hpp"

#include <algorithm>

#include "aoi_edge/errors.hpp"

namespace aoi_edge {
namespace {

std::size_t cell(const StateSpace& space, int b, int aoi, bool request) {
  return space.index(SensorState{b, aoi, request});
}

}  // namespace

ThresholdReport check_threshold_structure(const StateSpace& space, std::span<const ActionId> policy) {
  if (policy.size() != space.size()) throw ContractError("check_threshold_structure: policy size mismatch");
  const int cap = space.battery_capacity();
  const int amax = space.aoi_max();
  auto commands = [&](int b, int aoi) { return policy[cell(space, b, aoi, true)] == 1; };

  ThresholdReport report;
  for (int b = 0; b <= cap; ++b) {
    for (int aoi = 1; aoi <= amax; ++aoi) {
      if (!commands(b, aoi)) continue;
      if (report.aoi_monotone && aoi < amax && !commands(b, aoi + 1)) {
        report.aoi_monotone = false;
        report.aoi_witness = Witness{{b, aoi}, {b, aoi + 1}};
      }
      if (report.battery_monotone && b < cap && !commands(b + 1, aoi)) {
        report.battery_monotone = false;
        report.battery_witness = Witness{{b, aoi}, {b + 1, aoi}};
      }
    }
  }
  return report;
}

ValueMonotonicityReport check_value_monotonicity(const StateSpace& space, std::span<const double> v,
                                                 double tolerance) {
  if (v.size() != space.size()) throw ContractError("check_value_monotonicity: value size mismatch");
  const int cap = space.battery_capacity();
  const int amax = space.aoi_max();
  ValueMonotonicityReport report;
  for (const bool r : {true, false}) {
    for (int b = 0; b <= cap; ++b) {
      for (int aoi = 1; aoi <= amax; ++aoi) {
        const double here = v[cell(space, b, aoi, r)];
        if (report.aoi_nondecreasing && aoi < amax && v[cell(space, b, aoi + 1, r)] < here - tolerance) {
          report.aoi_nondecreasing = false;
          report.aoi_witness = Witness{{b, aoi}, {b, aoi + 1}};
          report.witness_request = r;
        }
        if (report.battery_nonincreasing && b < cap && v[cell(space, b + 1, aoi, r)] > here + tolerance) {
          report.battery_nonincreasing = false;
          report.battery_witness = Witness{{b, aoi}, {b + 1, aoi}};
          report.witness_request = r;
        }
      }
    }
  }
  return report;
}

DeltaQReport check_delta_q_monotone(const StateSpace& space, const QTableExact& q, double tolerance) {
  if (q.num_states != space.size() || q.num_actions < 2) {
    throw ContractError("check_delta_q_monotone: q table does not match the state space");
  }
  DeltaQReport report;
  auto delta = [&](int b, int aoi) {
    const std::size_t s = cell(space, b, aoi, true);
    return q.at(s, 1) - q.at(s, 0);
  };
  for (int b = 0; b <= space.battery_capacity() && report.nonincreasing; ++b) {
    for (int aoi = 1; aoi < space.aoi_max(); ++aoi) {
      if (delta(b, aoi + 1) > delta(b, aoi) + tolerance) {
        report.nonincreasing = false;
        report.witness = Witness{{b, aoi}, {b, aoi + 1}};
        break;
      }
    }
  }
  return report;
}

std::vector<GridPoint> command_region(const StateSpace& space, std::span<const ActionId> policy) {
  if (policy.size() != space.size()) throw ContractError("command_region: policy size mismatch");
  std::vector<GridPoint> out;
  for (int b = 0; b <= space.battery_capacity(); ++b) {
    for (int aoi = 1; aoi <= space.aoi_max(); ++aoi) {
      if (policy[cell(space, b, aoi, true)] == 1) out.push_back({b, aoi});
    }
  }
  return out;
}

bool region_contains(std::span<const GridPoint> outer, std::span<const GridPoint> inner) {
  return std::ranges::all_of(inner, [&](const GridPoint& p) { return std::ranges::find(outer, p) != outer.end(); });
}

}  // namespace aoi_edge
