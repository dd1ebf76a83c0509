#include "aoi_edge/sensor_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aoi_edge/errors.hpp"

namespace aoi_edge {
namespace {

bool is_probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

struct BatteryAoiBranch {
  int battery;
  int aoi;
  double probability;
};

// (battery, aoi) marginal of the next state, case by case.
std::vector<BatteryAoiBranch> battery_aoi_branches(const SensorState& s, Command a,
                                                   const SensorParams& p) {
  const double lambda = p.harvest_prob;
  const double xi = p.tx_success_prob;
  const int stale = std::min(s.aoi + 1, p.aoi_max);
  const int b = s.battery;

  if (a == Command::hold) {
    if (b < p.battery_capacity) {
      return {{b + 1, stale, lambda}, {b, stale, 1.0 - lambda}};
    }
    return {{b, stale, 1.0}};
  }
  if (b == 0) {
    // Commanded with an empty battery: nothing is sent.
    return {{1, stale, lambda}, {0, stale, 1.0 - lambda}};
  }
  // The update consumes one unit; a concurrent harvest refills it.
  return {{b, 1, lambda * xi},
          {b, stale, lambda * (1.0 - xi)},
          {b - 1, 1, (1.0 - lambda) * xi},
          {b - 1, stale, (1.0 - lambda) * (1.0 - xi)}};
}

}  // namespace

std::vector<std::string> SensorParams::violations() const {
  std::vector<std::string> out;
  if (battery_capacity < 1) out.emplace_back("battery_capacity must be >= 1");
  if (aoi_max < 1) out.emplace_back("aoi_max must be >= 1");
  if (!is_probability(harvest_prob)) out.emplace_back("harvest_prob out of [0,1]");
  if (!is_probability(tx_success_prob)) out.emplace_back("tx_success_prob out of [0,1]");
  if (!is_probability(request_prob)) out.emplace_back("request_prob out of [0,1]");
  if (!std::isfinite(cost_weight) || cost_weight < 0.0) {
    out.emplace_back("cost_weight must be finite and >= 0");
  }
  return out;
}

void SensorParams::validate() const {
  const auto issues = violations();
  if (issues.empty()) return;
  std::ostringstream msg;
  msg << "invalid sensor parameters:";
  for (const auto& issue : issues) msg << ' ' << issue << ';';
  throw ContractError(msg.str());
}

int battery_step(int battery, bool harvest, bool tx, int capacity) {
  if (battery < 0 || battery > capacity) {
    throw ContractError("battery_step: battery level outside [0, capacity]");
  }
  if (tx && battery == 0) {
    throw ContractError("battery_step: transmission from an empty battery");
  }
  return std::min(battery + (harvest ? 1 : 0) - (tx ? 1 : 0), capacity);
}

int aoi_step(int aoi, bool channel_success, int aoi_max) {
  if (aoi < 1 || aoi > aoi_max) throw ContractError("aoi_step: aoi outside [1, aoi_max]");
  return channel_success ? 1 : std::min(aoi + 1, aoi_max);
}

StateSpace::StateSpace(int battery_capacity, int aoi_max)
    : battery_capacity_(battery_capacity), aoi_max_(aoi_max) {
  if (battery_capacity < 1 || aoi_max < 1) {
    throw ContractError("StateSpace: capacity and aoi_max must be >= 1");
  }
  size_ = static_cast<std::size_t>(battery_capacity + 1) * static_cast<std::size_t>(aoi_max) * 2;
}

bool StateSpace::contains(const SensorState& s) const noexcept {
  return s.battery >= 0 && s.battery <= battery_capacity_ && s.aoi >= 1 && s.aoi <= aoi_max_;
}

std::size_t StateSpace::index(const SensorState& s) const {
  if (!contains(s)) throw ContractError("StateSpace::index: state outside the domain");
  return (static_cast<std::size_t>(s.battery) * static_cast<std::size_t>(aoi_max_) +
          static_cast<std::size_t>(s.aoi - 1)) *
             2 +
         (s.request ? 1 : 0);
}

SensorState StateSpace::state(std::size_t index) const {
  if (index >= size_) throw ContractError("StateSpace::state: index out of range");
  const bool request = (index % 2) == 1;
  index /= 2;
  const int aoi = static_cast<int>(index % static_cast<std::size_t>(aoi_max_)) + 1;
  const int battery = static_cast<int>(index / static_cast<std::size_t>(aoi_max_));
  return {battery, aoi, request};
}

std::vector<SensorState> StateSpace::enumerate() const {
  std::vector<SensorState> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(state(i));
  return out;
}

std::vector<Successor> transition_distribution(const SensorState& s, Command a,
                                               const SensorParams& params) {
  if (a == Command::update && !s.request) {
    throw ContractError("transition_distribution: command issued without a request");
  }
  const StateSpace space(params);
  if (!space.contains(s)) throw ContractError("transition_distribution: state outside the domain");

  const double p = params.request_prob;
  std::vector<Successor> out;
  for (const auto& branch : battery_aoi_branches(s, a, params)) {
    for (const bool next_request : {false, true}) {
      const double prob = branch.probability * (next_request ? p : 1.0 - p);
      if (prob <= 0.0) continue;
      const SensorState next{branch.battery, branch.aoi, next_request};
      auto same = std::find_if(out.begin(), out.end(),
                               [&](const Successor& x) { return x.state == next; });
      if (same != out.end()) {
        same->probability += prob;
      } else {
        out.push_back({next, prob});
      }
    }
  }
  return out;
}

TransitionKernel::TransitionKernel(const SensorParams& params)
    : params_(params), space_(params) {
  params.validate();
  offsets_.reserve(2 * space_.size() + 1);
  offsets_.push_back(0);
  for (std::size_t i = 0; i < space_.size(); ++i) {
    const SensorState s = space_.state(i);
    for (const Command a : {Command::hold, Command::update}) {
      if (a == Command::update && !s.request) {
        offsets_.push_back(static_cast<std::uint32_t>(entries_.size()));
        continue;
      }
      double total = 0.0;
      for (const auto& succ : transition_distribution(s, a, params_)) {
        entries_.push_back({static_cast<std::uint32_t>(space_.index(succ.state)), succ.probability});
        total += succ.probability;
      }
      if (std::abs(total - 1.0) > kStochasticTolerance) {
        throw ContractError("TransitionKernel: row probabilities do not sum to one");
      }
      offsets_.push_back(static_cast<std::uint32_t>(entries_.size()));
    }
  }
}

bool TransitionKernel::admissible(std::size_t state, Command a) const {
  if (state >= space_.size()) throw ContractError("TransitionKernel: state index out of range");
  return a == Command::hold || space_.state(state).request;
}

std::span<const TransitionKernel::Entry> TransitionKernel::row(std::size_t state, Command a) const {
  if (!admissible(state, a)) {
    throw ContractError("TransitionKernel::row: command is inadmissible without a request");
  }
  const std::size_t slot = 2 * state + static_cast<std::size_t>(to_int(a));
  return {entries_.data() + offsets_[slot], entries_.data() + offsets_[slot + 1]};
}

}  // namespace aoi_edge
