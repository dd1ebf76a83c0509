#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aoi_edge/finite_mdp.hpp"
#include "aoi_edge/sensor_model.hpp"
#include "aoi_edge/simulator.hpp"
#include "aoi_edge/value_iteration.hpp"

namespace aoi_edge {

inline constexpr std::size_t kDefaultProductStateCap = 1'000'000;

/// Product state space of K sensors. Each sensor's request flag ranges over
/// the values it can actually take: {1} when p = 1, {0} when p = 0, else
/// {0, 1}. Sensor 0 is the slowest axis of the flattening.
class CoupledSpace {
 public:
  /// Throws SizeGuardError when the product exceeds `state_cap`.
  explicit CoupledSpace(std::span<const SensorParams> params, std::size_t state_cap = kDefaultProductStateCap);

  std::size_t num_sensors() const noexcept { return params_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t local_size(std::size_t k) const noexcept { return local_sizes_[k]; }
  std::size_t stride(std::size_t k) const noexcept { return strides_[k]; }
  std::span<const SensorParams> params() const noexcept { return params_; }

  bool contains_local(std::size_t k, const SensorState& s) const noexcept;
  std::size_t local_index(std::size_t k, const SensorState& s) const;
  SensorState local_state(std::size_t k, std::size_t local) const;

  std::size_t index(std::span<const SensorState> states) const;
  std::vector<SensorState> state(std::size_t index) const;

 private:
  std::vector<SensorParams> params_;
  std::vector<std::vector<bool>> request_values_;
  std::vector<std::size_t> local_sizes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

/// Joint commands with at most M updates. Ids rank masks by (number of
/// commands, mask), so the lowest id among tied actions commands the fewest
/// sensors. Bit k of a mask is sensor k.
class JointActionSet {
 public:
  JointActionSet(std::size_t num_sensors, int max_commands);

  std::size_t size() const noexcept { return masks_.size(); }
  std::size_t num_sensors() const noexcept { return num_sensors_; }
  int max_commands() const noexcept { return max_commands_; }
  std::uint32_t mask(ActionId id) const { return masks_.at(id); }
  /// Throws ContractError for masks with more than M commands.
  ActionId id(std::uint32_t mask) const;
  std::vector<Command> commands(ActionId id) const;

 private:
  std::size_t num_sensors_;
  int max_commands_;
  std::vector<std::uint32_t> masks_;
  std::vector<std::int64_t> ids_;  // by mask, -1 when over the limit
};

struct CoupledSuccessor {
  std::vector<SensorState> state;
  double probability;
  double cost;
};

/// Product of per-sensor successor distributions; the branch cost is the sum
/// of per-sensor costs. Throws ContractError for inadmissible joint commands.
std::vector<CoupledSuccessor> coupled_kernel(std::span<const SensorState> states, std::span<const Command> actions,
                                             std::span<const SensorParams> params, int max_commands);

/// Explicit product MDP (action ids from JointActionSet). Meant for small
/// instances that feed the generic solvers and the brute-force oracle.
FiniteMdp build_coupled_mdp(std::span<const SensorParams> params, int max_commands,
                            std::size_t state_cap = kDefaultProductStateCap);

struct CoupledSolution {
  CoupledSpace space;
  JointActionSet actions;
  SolverOptions options;
  std::vector<double> values;
  std::vector<ActionId> policy;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Value iteration over the constrained product MDP. Backups apply the
/// per-sensor kernels axis by axis instead of enumerating joint successors.
CoupledSolution coupled_via(std::span<const SensorParams> params, int max_commands, const SolverOptions& options,
                            std::size_t state_cap = kDefaultProductStateCap);

/// Keeps every proposed command when at most M are proposed; otherwise the M
/// proposals with the largest AoI, lower sensor index first among equal AoI.
std::vector<Command> truncate_actions(std::span<const Command> proposed, std::span<const int> aois, int max_commands);

/// Commands the min(M, |W|) requested sensors with the largest AoI.
std::vector<Command> constrained_greedy(std::span<const bool> requests, std::span<const int> aois, int max_commands);

/// Unconstrained per-sensor tables followed by truncation to M commands.
class TruncationPolicy final : public JointPolicy {
 public:
  TruncationPolicy(SensorTablePolicy base, int max_commands);
  std::string name() const override { return "truncation"; }
  void decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const override;

 private:
  SensorTablePolicy base_;
  int max_commands_;
};

class ConstrainedGreedyPolicy final : public JointPolicy {
 public:
  explicit ConstrainedGreedyPolicy(int max_commands) : max_commands_(max_commands) {}
  std::string name() const override { return "constrained-greedy"; }
  void decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const override;

 private:
  int max_commands_;
};

/// Lookup in a solved product policy; needs exact battery observations.
class CoupledTablePolicy final : public JointPolicy {
 public:
  explicit CoupledTablePolicy(std::shared_ptr<const CoupledSolution> solution);
  std::string name() const override { return "coupled-optimal"; }
  void decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const override;

 private:
  std::shared_ptr<const CoupledSolution> solution_;
};

}  // namespace aoi_edge
