#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aoi_edge/observation.hpp"
#include "aoi_edge/sensor_model.hpp"
#include "aoi_edge/simulator.hpp"
#include "aoi_edge/value_iteration.hpp"

namespace aoi_edge {

/// Exploration and learning-rate schedules of the online learner.
///   epsilon(t) = floor + span * exp(-decay * t)
///   alpha(t)   = alpha_high for t < alpha_switch, alpha_low afterwards
struct LearnerConfig {
  double epsilon_floor = 0.02;
  double epsilon_span = 0.98;
  double epsilon_decay = 1e-7;
  double alpha_high = 0.5;
  double alpha_low = 0.01;
  std::int64_t alpha_switch = 10'000'000;
  double discount = 0.99;
  ObservationMode mode = ObservationMode::exact;
  std::uint64_t seed = 1;

  /// Long schedule of the reference experiments (decay 1e-7, switch at 1e7).
  static LearnerConfig paper_schedule();
  /// Shortened schedule for minutes-scale runs (decay 1e-5, switch at 1e5).
  static LearnerConfig desk_schedule();

  std::vector<std::string> violations() const;
  void validate() const;
};

double epsilon(std::int64_t t, const LearnerConfig& cfg);
double alpha(std::int64_t t, const LearnerConfig& cfg);

/// Q-values over the observed state space, both actions; visit counts alongside.
class QTableLearned {
 public:
  explicit QTableLearned(const StateSpace& space);

  const StateSpace& space() const noexcept { return space_; }
  double value(std::size_t s, Command a) const { return q_[2 * s + static_cast<std::size_t>(to_int(a))]; }
  void set(std::size_t s, Command a, double v) { q_[2 * s + static_cast<std::size_t>(to_int(a))] = v; }
  std::uint64_t visits(std::size_t s, Command a) const {
    return visits_[2 * s + static_cast<std::size_t>(to_int(a))];
  }
  std::uint64_t visits(std::size_t s) const { return visits(s, Command::hold) + visits(s, Command::update); }

  /// min over admissible actions (hold only when no request is pending).
  double min_value(std::size_t s) const;
  /// Greedy admissible action; ties go to hold.
  Command greedy(std::size_t s) const;

  std::span<const double> values() const noexcept { return q_; }
  std::span<const std::uint64_t> visit_counts() const noexcept { return visits_; }
  /// Copies admissible entries of an exact Q table (e.g. from value iteration).
  static QTableLearned from_exact(const StateSpace& space, const QTableExact& q);

  friend void q_update(QTableLearned&, const EdgeObservation&, Command, double, const EdgeObservation&, double,
                       double);

 private:
  StateSpace space_;
  std::vector<double> q_;
  std::vector<std::uint64_t> visits_;
};

/// hold when no request; otherwise uniform random with probability eps(t),
/// greedy with probability 1 - eps(t).
Command select_action(const QTableLearned& q, const EdgeObservation& obs, std::int64_t t, const LearnerConfig& cfg,
                      std::mt19937_64& rng);

/// q(obs,a) <- (1 - rate) q(obs,a) + rate (cost + discount min_a' q(next,a')).
void q_update(QTableLearned& q, const EdgeObservation& obs, Command a, double cost, const EdgeObservation& next,
              double learning_rate, double discount);

struct LearnerRun {
  std::vector<QTableLearned> tables;
  RunningCurve curve;
  std::vector<double> per_sensor_average;
  double total_average = 0.0;
};

/// Online learning against the simulator, one table per sensor, for a single
/// episode of `horizon` slots (config.horizon is ignored). `initial` seeds
/// the tables; empty means zeros.
LearnerRun run_learner(const EnvConfig& env, const LearnerConfig& cfg, std::int64_t horizon,
                       std::span<const std::int64_t> checkpoints, std::vector<QTableLearned> initial = {});

/// Greedy policy of the learned tables as per-sensor action tables.
std::vector<std::vector<ActionId>> greedy_tables(std::span<const QTableLearned> tables);

}  // namespace aoi_edge
