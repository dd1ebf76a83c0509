#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "aoi_edge/errors.hpp"
#include "aoi_edge/qlearning.hpp"
#include "aoi_edge/value_iteration.hpp"
#include "test_support.hpp"

using namespace aoi_edge;
using aoi_edge::testing::make_params;

namespace {

EnvConfig tiny_env(std::uint64_t seed, ObservationMode mode = ObservationMode::exact) {
  EnvConfig env;
  env.sensors = {make_params(2, 4, 0.5, 0.5, 0.5)};
  env.seed = seed;
  env.observation = mode;
  return env;
}

LearnerConfig fixed_rate(double rate, double discount) {
  LearnerConfig cfg;
  cfg.epsilon_floor = 0.0;
  cfg.epsilon_span = 0.0;
  cfg.alpha_high = rate;
  cfg.alpha_low = rate;
  cfg.discount = discount;
  return cfg;
}

}  // namespace

TEST_CASE("exploration and learning-rate schedules") {
  const auto paper = LearnerConfig::paper_schedule();
  CHECK(epsilon(0, paper) == doctest::Approx(1.0));
  CHECK(epsilon(10'000'000, paper) == doctest::Approx(0.02 + 0.98 * std::exp(-1.0)));
  CHECK(epsilon(10'000'000, paper) == doctest::Approx(0.3805).epsilon(1e-4));
  CHECK(epsilon(std::int64_t{1} << 40, paper) == doctest::Approx(0.02));
  CHECK(alpha(0, paper) == 0.5);
  CHECK(alpha(9'999'999, paper) == 0.5);
  CHECK(alpha(10'000'000, paper) == 0.01);

  const auto desk = LearnerConfig::desk_schedule();
  CHECK(epsilon(100'000, desk) == doctest::Approx(0.3805).epsilon(1e-4));
  CHECK(alpha(99'999, desk) == 0.5);
  CHECK(alpha(100'000, desk) == 0.01);

  CHECK_THROWS_AS(epsilon(-1, paper), ContractError);
  LearnerConfig bad;
  bad.epsilon_floor = 0.5;
  bad.epsilon_span = 0.6;
  bad.epsilon_decay = 0.0;
  CHECK(bad.violations().size() == 2);
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("action selection") {
  const StateSpace space(2, 4);
  QTableLearned q(space);
  const EdgeObservation idle{1, 2, false};
  const EdgeObservation busy{1, 2, true};
  const std::size_t s = space.index(busy.as_state());
  q.set(s, Command::hold, 2.0);
  q.set(s, Command::update, 1.0);
  q.set(space.index(idle.as_state()), Command::update, -100.0);
  std::mt19937_64 rng(3);

  const auto explore_all = LearnerConfig::paper_schedule();
  for (int i = 0; i < 100; ++i) CHECK(select_action(q, idle, 0, explore_all, rng) == Command::hold);

  const auto exploit = fixed_rate(0.5, 0.99);
  CHECK(select_action(q, busy, 0, exploit, rng) == Command::update);
  q.set(s, Command::update, 2.0);
  CHECK(select_action(q, busy, 0, exploit, rng) == Command::hold);

  LearnerConfig uniform;
  uniform.epsilon_floor = 1.0;
  uniform.epsilon_span = 0.0;
  constexpr int kDraws = 10000;
  int updates = 0;
  for (int i = 0; i < kDraws; ++i) updates += select_action(q, busy, 0, uniform, rng) == Command::update;
  const double sigma = std::sqrt(0.25 / kDraws);
  CHECK(std::abs(updates / double(kDraws) - 0.5) <= 3.0 * sigma);
}

TEST_CASE("q update arithmetic") {
  const StateSpace space(2, 4);
  const EdgeObservation obs{1, 2, true};
  const EdgeObservation next{0, 1, false};
  const std::size_t s = space.index(obs.as_state());

  QTableLearned q(space);
  q_update(q, obs, Command::update, 7.0, next, 0.5, 0.99);
  CHECK(q.value(s, Command::update) == doctest::Approx(3.5));
  CHECK(q.visits(s, Command::update) == 1);

  q_update(q, obs, Command::update, 100.0, next, 0.0, 0.99);
  CHECK(q.value(s, Command::update) == doctest::Approx(3.5));

  q_update(q, obs, Command::hold, 4.0, obs, 1.0, 0.0);
  CHECK(q.value(s, Command::hold) == doctest::Approx(4.0));

  q.set(space.index(next.as_state()), Command::hold, 10.0);
  q.set(space.index(next.as_state()), Command::update, -50.0);  // inadmissible without a request
  q_update(q, obs, Command::hold, 0.0, next, 1.0, 0.5);
  CHECK(q.value(s, Command::hold) == doctest::Approx(5.0));
}

TEST_CASE("edge observation of the battery") {
  const SensorState now{3, 1, true};
  const EdgeObservation previous{9, 5, false};
  const SlotEvents delivered{true, true, false};
  const SlotEvents lost{true, false, false};

  const auto exact = observe(ObservationMode::exact, now, lost, 6, previous);
  CHECK(exact == EdgeObservation{3, 1, true});
  CHECK(observe(ObservationMode::partial, now, delivered, 6, previous).battery == 6);
  const auto stale = observe(ObservationMode::partial, now, lost, 6, previous);
  CHECK(stale.battery == 9);
  CHECK(stale.aoi == 1);
  CHECK(stale.request);
  CHECK(parse_observation_mode("partial") == ObservationMode::partial);
  CHECK_THROWS_AS(parse_observation_mode("psychic"), ContractError);
}

TEST_CASE("partial observations change only on delivered updates") {
  auto env_cfg = tiny_env(8, ObservationMode::partial);
  env_cfg.initial.battery = 0;
  Environment env(env_cfg, 0);
  CHECK(env.observations()[0].battery == 2);

  std::mt19937_64 rng(1);
  int deliveries = 0;
  for (int t = 0; t < 5000; ++t) {
    const int battery_before = env.states()[0].battery;
    const int belief_before = env.observations()[0].battery;
    const Command a[] = {env.observations()[0].request && (rng() & 1u) ? Command::update : Command::hold};
    const auto& trace = env.step(a);
    const int belief = env.observations()[0].battery;
    if (trace.sensors[0].success) {
      ++deliveries;
      CHECK(belief == battery_before);
    } else {
      CHECK(belief == belief_before);
    }
    CHECK(env.observations()[0].aoi == env.states()[0].aoi);
  }
  CHECK(deliveries > 100);
}

TEST_CASE("learner is deterministic and bounded") {
  auto cfg = LearnerConfig::desk_schedule();
  cfg.discount = 0.9;
  cfg.seed = 4;
  const std::vector<std::int64_t> checkpoints{1000, 50000};
  for (const auto mode : {ObservationMode::exact, ObservationMode::partial}) {
    cfg.mode = mode;
    const auto a = run_learner(tiny_env(21), cfg, 50000, checkpoints);
    const auto b = run_learner(tiny_env(21), cfg, 50000, checkpoints);
    REQUIRE(a.tables.size() == 1);
    CHECK(std::ranges::equal(a.tables[0].values(), b.tables[0].values()));
    CHECK(std::ranges::equal(a.tables[0].visit_counts(), b.tables[0].visit_counts()));
    CHECK(a.curve.total == b.curve.total);
    CHECK(a.curve.slots == checkpoints);
    CHECK(a.total_average == doctest::Approx(a.curve.total.back()));

    const double bound = 4.0 / (1.0 - 0.9);
    for (const double v : a.tables[0].values()) {
      CHECK(v >= 0.0);
      CHECK(v <= bound + 1e-9);
    }
  }
  const auto other = run_learner(tiny_env(22), cfg, 50000, checkpoints);
  CHECK(other.curve.total != run_learner(tiny_env(21), cfg, 50000, checkpoints).curve.total);
}

TEST_CASE("every admissible pair is visited") {
  auto cfg = LearnerConfig::desk_schedule();
  cfg.discount = 0.9;
  const auto run = run_learner(tiny_env(5), cfg, 1'000'000, {});
  const auto& q = run.tables[0];
  const auto& space = q.space();
  for (std::size_t s = 0; s < space.size(); ++s) {
    CHECK(q.visits(s, Command::hold) >= 100);
    if (space.state(s).request) {
      CHECK(q.visits(s, Command::update) >= 100);
    } else {
      CHECK(q.visits(s, Command::update) == 0);
    }
  }
}

TEST_CASE("greedy learning from the optimal table stays put") {
  const auto env = tiny_env(6);
  SolverOptions opts;
  opts.discount = 0.9;
  opts.threshold = 1e-10;
  const auto via = value_iteration(build_sensor_mdp(TransitionKernel(env.sensors[0])), opts);
  const StateSpace space(env.sensors[0]);

  auto cfg = fixed_rate(1e-4, 0.9);
  const auto run = run_learner(env, cfg, 200'000, {}, {QTableLearned::from_exact(space, via.q)});
  const auto learned = greedy_tables(run.tables).front();
  for (std::size_t s = 0; s < space.size(); ++s) {
    if (run.tables[0].visits(s) == 0 || !via.q.admissible(s, 1)) continue;
    const double gap = std::abs(via.q.at(s, 1) - via.q.at(s, 0));
    if (gap <= 1e-9 * std::abs(via.q.at(s, 0))) continue;  // tie, either action is optimal
    CHECK(learned[s] == via.policy.actions[s]);
  }
}

TEST_CASE("exact-mode learning recovers the optimal policy") {
  const auto env = tiny_env(7);
  SolverOptions opts;
  opts.discount = 0.9;
  opts.threshold = 1e-10;
  const auto via = value_iteration(build_sensor_mdp(TransitionKernel(env.sensors[0])), opts);
  const StateSpace space(env.sensors[0]);

  auto cfg = LearnerConfig::desk_schedule();
  cfg.discount = 0.9;
  cfg.alpha_low = 0.002;
  const auto run = run_learner(env, cfg, 3'000'000, {});
  const auto learned = greedy_tables(run.tables).front();
  int compared = 0;
  for (std::size_t s = 0; s < space.size(); ++s) {
    const auto st = space.state(s);
    // An update from an empty battery is a no-op, so both actions are optimal there.
    if (!st.request || st.battery == 0 || run.tables[0].visits(s) < 1000) continue;
    CHECK(learned[s] == via.policy.actions[s]);
    ++compared;
  }
  CHECK(compared >= 8);
}
