#include "aoi_edge/finite_mdp.hpp"

#include <cmath>

#include "aoi_edge/errors.hpp"

namespace aoi_edge {

std::size_t FiniteMdp::add_state() {
  if (finalized_) throw ContractError("FiniteMdp: already finalized");
  if (state_offsets_.empty()) state_offsets_.push_back(0);
  state_offsets_.push_back(static_cast<std::uint32_t>(rows_.size()));
  return state_offsets_.size() - 2;
}

void FiniteMdp::add_action(ActionId id, std::span<const Transition> transitions) {
  if (finalized_ || state_offsets_.empty()) throw ContractError("FiniteMdp::add_action: no open state");
  if (id >= num_action_ids_) throw ContractError("FiniteMdp::add_action: action id out of range");
  const std::size_t first_row = state_offsets_[state_offsets_.size() - 2];
  if (rows_.size() > first_row && rows_.back().id >= id) {
    throw ContractError("FiniteMdp::add_action: action ids must increase within a state");
  }
  ActionRow row{id, static_cast<std::uint32_t>(transitions_.size()), 0};
  for (const auto& t : transitions) {
    transitions_.push_back(t);
    if (t.cost > max_cost_) max_cost_ = t.cost;
  }
  row.last = static_cast<std::uint32_t>(transitions_.size());
  rows_.push_back(row);
  state_offsets_.back() = static_cast<std::uint32_t>(rows_.size());
}

void FiniteMdp::finalize() {
  const std::size_t n = num_states();
  if (n == 0) throw ContractError("FiniteMdp: no states");
  for (std::size_t s = 0; s < n; ++s) {
    const auto rows = actions(s);
    if (rows.empty()) throw ContractError("FiniteMdp: state without admissible action");
    for (const auto& row : rows) {
      double total = 0.0;
      for (const auto& t : transitions(row)) {
        if (t.next >= n) throw ContractError("FiniteMdp: successor index out of range");
        if (!(t.probability > 0.0 && t.probability <= 1.0)) {
          throw ContractError("FiniteMdp: branch probability outside (0,1]");
        }
        if (!(t.cost >= 0.0) || !std::isfinite(t.cost)) {
          throw ContractError("FiniteMdp: negative or non-finite cost");
        }
        total += t.probability;
      }
      if (std::abs(total - 1.0) > TransitionKernel::kStochasticTolerance) {
        throw ContractError("FiniteMdp: kernel row is not stochastic");
      }
    }
  }
  finalized_ = true;
}

const FiniteMdp::ActionRow* FiniteMdp::find(std::size_t state, ActionId id) const {
  for (const auto& row : actions(state)) {
    if (row.id == id) return &row;
  }
  return nullptr;
}

FiniteMdp build_sensor_mdp(const TransitionKernel& kernel) {
  const auto& space = kernel.space();
  const auto& p = kernel.params();
  FiniteMdp mdp(2);
  std::vector<Transition> buffer;
  for (std::size_t s = 0; s < space.size(); ++s) {
    mdp.add_state();
    const bool request = space.state(s).request;
    for (const Command a : {Command::hold, Command::update}) {
      if (!kernel.admissible(s, a)) continue;
      buffer.clear();
      for (const auto& e : kernel.row(s, a)) {
        const int next_aoi = space.state(e.next).aoi;
        buffer.push_back({e.next, e.probability, immediate_cost(request, p.cost_weight, next_aoi)});
      }
      mdp.add_action(static_cast<ActionId>(to_int(a)), buffer);
    }
  }
  mdp.finalize();
  return mdp;
}

}  // namespace aoi_edge
