#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "aoi_edge/finite_mdp.hpp"
#include "aoi_edge/sensor_model.hpp"

namespace aoi_edge {

/// Relative margin inside which two action values count as tied; ties go to
/// the lower action id (hold before update).
inline constexpr double kDefaultTieTolerance = 1e-9;

struct SolverOptions {
  double discount = 0.99;
  double threshold = 1e-3;
  std::size_t max_sweeps = 1'000'000;
  double tie_tolerance = kDefaultTieTolerance;

  /// Throws ContractError unless 0 <= discount < 1 and threshold > 0.
  void validate() const;
};

struct ValueTable {
  std::vector<double> values;
  double discount = 0.0;
  double threshold = 0.0;
};

/// Dense (state, action id) table; inadmissible entries hold +infinity.
struct QTableExact {
  static constexpr double kInadmissible = std::numeric_limits<double>::infinity();

  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> values;

  double at(std::size_t s, ActionId a) const { return values[s * num_actions + a]; }
  bool admissible(std::size_t s, ActionId a) const { return at(s, a) != kInadmissible; }
};

struct PolicyTable {
  std::vector<ActionId> actions;
  std::string solver;
  std::size_t iterations = 0;
  double discount = 0.0;

  bool operator==(const PolicyTable&) const = default;
};

struct ViaResult {
  ValueTable value;
  QTableExact q;
  PolicyTable policy;
  std::size_t iterations = 0;
  bool converged = false;
  /// Sup-norm change of every sweep, in order.
  std::vector<double> sweep_deltas;
};

/// Synchronous value iteration from v = 0 until a sweep changes no entry by
/// theta or more; the policy is greedy with respect to the returned values.
ViaResult value_iteration(const FiniteMdp& mdp, const SolverOptions& options);

/// q(s,a) = sum over successors of P(s'|s,a) (c(s,a,s') + discount v(s')).
QTableExact q_from_v(const FiniteMdp& mdp, std::span<const double> v, double discount);

/// Argmin over admissible actions; the lowest id wins within tie_tolerance.
PolicyTable extract_policy(const QTableExact& q, double tie_tolerance = kDefaultTieTolerance);

/// Value of a deterministic policy by fixed-point iteration, accurate to
/// `tolerance` in sup-norm.
ValueTable policy_evaluation(const FiniteMdp& mdp, std::span<const ActionId> policy, double discount,
                             double tolerance = 1e-10);

struct BruteForceResult {
  PolicyTable policy;
  std::vector<double> values;
  std::size_t policies_evaluated = 0;
};

/// Exhaustive search over deterministic policies. Actions with identical rows
/// are merged first (the lowest id represents them). Among optimal policies
/// the one using the lowest id at every state is returned. Throws
/// SizeGuardError when more than `max_policies` remain.
BruteForceResult brute_force_optimal(const FiniteMdp& mdp, double discount,
                                     std::size_t max_policies = 16384);

/// Everything the per-sensor planner produces for one parameter set.
struct SensorSolution {
  SensorParams params;
  SolverOptions options;
  ViaResult result;
};

SensorSolution solve_sensor(const SensorParams& params, const SolverOptions& options);

}  // namespace aoi_edge
