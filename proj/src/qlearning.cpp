#include "aoi_edge/qlearning.hpp"

#include <cmath>
#include <sstream>

#include "aoi_edge/errors.hpp"

namespace aoi_edge {

LearnerConfig LearnerConfig::paper_schedule() { return LearnerConfig{}; }

LearnerConfig LearnerConfig::desk_schedule() {
  LearnerConfig cfg;
  cfg.epsilon_decay = 1e-5;
  cfg.alpha_switch = 100'000;
  return cfg;
}

std::vector<std::string> LearnerConfig::violations() const {
  std::vector<std::string> out;
  if (!(epsilon_floor >= 0.0 && epsilon_span >= 0.0 && epsilon_floor + epsilon_span <= 1.0)) {
    out.emplace_back("epsilon schedule must satisfy 0 <= floor <= floor + span <= 1");
  }
  if (!(epsilon_decay > 0.0)) out.emplace_back("epsilon_decay must be > 0");
  if (!(alpha_high >= 0.0 && alpha_high <= 1.0) || !(alpha_low >= 0.0 && alpha_low <= 1.0)) {
    out.emplace_back("learning rates must lie in [0,1]");
  }
  if (alpha_switch < 0) out.emplace_back("alpha_switch must be >= 0");
  if (!(discount >= 0.0 && discount < 1.0)) out.emplace_back("discount must lie in [0,1)");
  return out;
}

void LearnerConfig::validate() const {
  const auto issues = violations();
  if (issues.empty()) return;
  std::ostringstream msg;
  msg << "invalid learner configuration:";
  for (const auto& issue : issues) msg << ' ' << issue << ';';
  throw ContractError(msg.str());
}

double epsilon(std::int64_t t, const LearnerConfig& cfg) {
  if (t < 0) throw ContractError("epsilon: slot index must be >= 0");
  return cfg.epsilon_floor + cfg.epsilon_span * std::exp(-cfg.epsilon_decay * static_cast<double>(t));
}

double alpha(std::int64_t t, const LearnerConfig& cfg) {
  if (t < 0) throw ContractError("alpha: slot index must be >= 0");
  return t < cfg.alpha_switch ? cfg.alpha_high : cfg.alpha_low;
}

QTableLearned::QTableLearned(const StateSpace& space)
    : space_(space), q_(2 * space.size(), 0.0), visits_(2 * space.size(), 0) {}

double QTableLearned::min_value(std::size_t s) const {
  const double hold = value(s, Command::hold);
  if (!space_.state(s).request) return hold;
  return std::min(hold, value(s, Command::update));
}

Command QTableLearned::greedy(std::size_t s) const {
  if (!space_.state(s).request) return Command::hold;
  return value(s, Command::update) < value(s, Command::hold) ? Command::update : Command::hold;
}

QTableLearned QTableLearned::from_exact(const StateSpace& space, const QTableExact& q) {
  if (q.num_states != space.size() || q.num_actions != 2) throw ContractError("from_exact: table shape mismatch");
  QTableLearned out(space);
  for (std::size_t s = 0; s < space.size(); ++s) {
    out.set(s, Command::hold, q.at(s, 0));
    if (q.admissible(s, 1)) out.set(s, Command::update, q.at(s, 1));
  }
  return out;
}

Command select_action(const QTableLearned& q, const EdgeObservation& obs, std::int64_t t, const LearnerConfig& cfg,
                      std::mt19937_64& rng) {
  if (!obs.request) return Command::hold;
  const double explore = epsilon(t, cfg);
  if (uniform01(rng) < explore) return command_from(uniform01(rng) < 0.5);
  return q.greedy(q.space().index(obs.as_state()));
}

void q_update(QTableLearned& q, const EdgeObservation& obs, Command a, double cost, const EdgeObservation& next,
              double learning_rate, double discount) {
  const std::size_t s = q.space_.index(obs.as_state());
  const std::size_t s_next = q.space_.index(next.as_state());
  const std::size_t slot = 2 * s + static_cast<std::size_t>(to_int(a));
  const double target = cost + discount * q.min_value(s_next);
  q.q_[slot] = (1.0 - learning_rate) * q.q_[slot] + learning_rate * target;
  ++q.visits_[slot];
}

LearnerRun run_learner(const EnvConfig& env_config, const LearnerConfig& cfg, std::int64_t horizon,
                       std::span<const std::int64_t> checkpoints, std::vector<QTableLearned> initial) {
  cfg.validate();
  if (horizon < 1) throw ContractError("run_learner: horizon must be >= 1");
  EnvConfig env_cfg = env_config;
  env_cfg.observation = cfg.mode;
  env_cfg.horizon = horizon;
  Environment env(env_cfg, 0);
  const std::size_t k = env.num_sensors();

  LearnerRun run;
  if (initial.empty()) {
    for (const auto& p : env_cfg.sensors) run.tables.emplace_back(StateSpace(p));
  } else {
    if (initial.size() != k) throw ContractError("run_learner: one initial table per sensor required");
    for (std::size_t i = 0; i < k; ++i) {
      if (!(initial[i].space() == StateSpace(env_cfg.sensors[i]))) {
        throw ContractError("run_learner: initial table does not match the sensor");
      }
    }
    run.tables = std::move(initial);
  }

  std::vector<std::mt19937_64> explore;
  for (std::size_t i = 0; i < k; ++i) {
    explore.push_back(make_stream(env_cfg.seed, cfg.seed, static_cast<std::uint32_t>(i), RandomSource::exploration));
  }

  std::vector<Command> actions(k, Command::hold);
  std::vector<EdgeObservation> before(k);
  std::vector<double> sums(k, 0.0);
  std::size_t next_checkpoint = 0;
  for (std::int64_t t = 0; t < horizon; ++t) {
    const auto obs = env.observations();
    for (std::size_t i = 0; i < k; ++i) {
      before[i] = obs[i];
      actions[i] = select_action(run.tables[i], obs[i], t, cfg, explore[i]);
    }
    const auto& trace = env.step(actions);
    const auto after = env.observations();
    const double rate = alpha(t, cfg);
    for (std::size_t i = 0; i < k; ++i) {
      const double cost = trace.sensors[i].cost;
      q_update(run.tables[i], before[i], actions[i], cost, after[i], rate, cfg.discount);
      sums[i] += cost;
    }
    const std::int64_t slots_done = t + 1;
    while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == slots_done) {
      std::vector<double> point(k);
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        point[i] = sums[i] / static_cast<double>(slots_done);
        total += point[i];
      }
      run.curve.slots.push_back(slots_done);
      run.curve.per_sensor.push_back(std::move(point));
      run.curve.total.push_back(total);
      ++next_checkpoint;
    }
  }
  run.per_sensor_average.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    run.per_sensor_average[i] = sums[i] / static_cast<double>(horizon);
    run.total_average += run.per_sensor_average[i];
  }
  return run;
}

std::vector<std::vector<ActionId>> greedy_tables(std::span<const QTableLearned> tables) {
  std::vector<std::vector<ActionId>> out;
  for (const auto& q : tables) {
    std::vector<ActionId> table(q.space().size());
    for (std::size_t s = 0; s < table.size(); ++s) table[s] = static_cast<ActionId>(to_int(q.greedy(s)));
    out.push_back(std::move(table));
  }
  return out;
}

}  // namespace aoi_edge
