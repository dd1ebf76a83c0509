#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aoi_edge/sensor_model.hpp"

namespace aoi_edge {

using ActionId = std::uint32_t;

/// One branch of a (state, action) row. The cost is charged on the branch,
/// since it depends on the successor's AoI.
struct Transition {
  std::uint32_t next;
  double probability;
  double cost;
};

/// Finite MDP in compressed sparse row form. Each state lists its admissible
/// actions in ascending ActionId order; lower ids win argmin ties.
class FiniteMdp {
 public:
  struct ActionRow {
    ActionId id;
    std::uint32_t first;
    std::uint32_t last;
  };

  explicit FiniteMdp(std::size_t num_action_ids) : num_action_ids_(num_action_ids) {}

  /// Appends a state; subsequent add_action calls attach to it.
  std::size_t add_state();
  /// Ids must increase within a state and be < num_action_ids().
  void add_action(ActionId id, std::span<const Transition> transitions);
  /// Checks stochasticity, successor ranges, and that every state has an action.
  void finalize();

  std::size_t num_states() const noexcept { return state_offsets_.empty() ? 0 : state_offsets_.size() - 1; }
  std::size_t num_action_ids() const noexcept { return num_action_ids_; }
  bool finalized() const noexcept { return finalized_; }

  std::span<const ActionRow> actions(std::size_t state) const {
    return {rows_.data() + state_offsets_[state], rows_.data() + state_offsets_[state + 1]};
  }
  std::span<const Transition> transitions(const ActionRow& row) const {
    return {transitions_.data() + row.first, transitions_.data() + row.last};
  }
  /// Row for a given action id, or nullptr when inadmissible.
  const ActionRow* find(std::size_t state, ActionId id) const;
  double max_cost() const noexcept { return max_cost_; }

 private:
  std::size_t num_action_ids_;
  std::vector<std::uint32_t> state_offsets_;
  std::vector<ActionRow> rows_;
  std::vector<Transition> transitions_;
  double max_cost_ = 0.0;
  bool finalized_ = false;
};

/// Per-sensor MDP: action id 0 = hold, 1 = update.
FiniteMdp build_sensor_mdp(const TransitionKernel& kernel);

}  // namespace aoi_edge
