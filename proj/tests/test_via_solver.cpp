#include <doctest.h>

#include <cmath>
#include <random>

#include "aoi_edge/errors.hpp"
#include "aoi_edge/finite_mdp.hpp"
#include "aoi_edge/structure.hpp"
#include "aoi_edge/value_iteration.hpp"
#include "test_support.hpp"

using namespace aoi_edge;
using aoi_edge::testing::make_params;

namespace {

ViaResult solve(const SensorParams& p, double discount = 0.9, double threshold = 1e-6) {
  SolverOptions opts;
  opts.discount = discount;
  opts.threshold = threshold;
  return value_iteration(build_sensor_mdp(TransitionKernel(p)), opts);
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("q from a zero value table") {
  const auto p = make_params(2, 4, 0.5, 1.0, 1.0);
  const StateSpace space(p);
  const auto mdp = build_sensor_mdp(TransitionKernel(p));
  const std::vector<double> zeros(space.size(), 0.0);
  const auto q = q_from_v(mdp, zeros, 0.9);
  const std::size_t s = space.index({1, 1, true});
  CHECK(q.at(s, 0) == doctest::Approx(2.0));
  CHECK(q.at(s, 1) == doctest::Approx(1.0));
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!space.state(i).request) CHECK_FALSE(q.admissible(i, 1));
  }
}

TEST_CASE("policy extraction breaks ties toward hold") {
  QTableExact q{1, 2, {5.0, 3.0}};
  CHECK(extract_policy(q).actions[0] == 1);
  q.values = {3.0, 3.0};
  CHECK(extract_policy(q).actions[0] == 0);
  q.values = {3.0, 3.0 - 1e-12};
  CHECK(extract_policy(q).actions[0] == 0);
  q.values = {3.0, QTableExact::kInadmissible};
  CHECK(extract_policy(q).actions[0] == 0);
}

TEST_CASE("policy evaluation of a dead channel") {
  const auto p = make_params(2, 4, 0.5, 0.0, 1.0);
  const StateSpace space(p);
  const auto mdp = build_sensor_mdp(TransitionKernel(p));
  const std::vector<ActionId> hold(space.size(), 0);
  const auto v = policy_evaluation(mdp, hold, 0.9);
  CHECK(v.values[space.index({2, 4, true})] == doctest::Approx(4.0 / (1.0 - 0.9)).epsilon(1e-9));
}

TEST_CASE("value iteration is optimal among evaluated policies") {
  const auto p = make_params(2, 4, 0.3, 0.8, 0.5);
  const auto mdp = build_sensor_mdp(TransitionKernel(p));
  const double theta = 1e-6;
  const auto via = solve(p, 0.9, theta);
  REQUIRE(via.converged);
  const auto v_pi = policy_evaluation(mdp, via.policy.actions, 0.9);
  CHECK(sup_distance(v_pi.values, via.value.values) <= 10 * theta);

  const StateSpace space(p);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ActionId> random(space.size(), 0);
    for (std::size_t s = 0; s < space.size(); ++s) {
      if (space.state(s).request) random[s] = static_cast<ActionId>(rng() & 1u);
    }
    const auto v = policy_evaluation(mdp, random, 0.9);
    for (std::size_t s = 0; s < space.size(); ++s) CHECK(v.values[s] >= via.value.values[s] - 10 * theta);
  }
}

TEST_CASE("limit cases of the harvest and channel rates") {
  SUBCASE("perfect harvest and channel command every charged request state") {
    const auto p = make_params(1, 2, 1.0, 1.0, 1.0);
    const StateSpace space(p);
    const auto via = solve(p);
    const auto oracle = brute_force_optimal(build_sensor_mdp(TransitionKernel(p)), 0.9);
    for (std::size_t s = 0; s < space.size(); ++s) {
      const auto st = space.state(s);
      const ActionId expected = (st.request && st.battery >= 1) ? 1 : 0;
      CHECK(via.policy.actions[s] == expected);
      CHECK(oracle.policy.actions[s] == expected);
    }
  }
  SUBCASE("dead channel never commands") {
    const auto p = make_params(2, 4, 0.4, 0.0, 0.6);
    const auto via = solve(p);
    const auto oracle = brute_force_optimal(build_sensor_mdp(TransitionKernel(p)), 0.9);
    for (const auto a : via.policy.actions) CHECK(a == 0);
    for (const auto a : oracle.policy.actions) CHECK(a == 0);
  }
}

TEST_CASE("value iteration matches the brute-force oracle") {
  SUBCASE("reference tiny instance") {
    const auto p = make_params(2, 4, 0.3, 0.8, 0.5);
    const double theta = 1e-6;
    const auto via = solve(p, 0.9, theta);
    const auto oracle = brute_force_optimal(build_sensor_mdp(TransitionKernel(p)), 0.9);
    CHECK(via.policy.actions == oracle.policy.actions);
    CHECK(sup_distance(via.value.values, oracle.values) <= 10 * theta);
  }
  SUBCASE("smallest instance enumerates sixteen policies") {
    const auto p = make_params(1, 2, 0.5, 0.5, 0.5);
    const auto oracle = brute_force_optimal(build_sensor_mdp(TransitionKernel(p)), 0.9);
    CHECK(oracle.policies_evaluated <= 16);
    CHECK(solve(p).policy.actions == oracle.policy.actions);
  }
  SUBCASE("size guard") {
    CHECK_THROWS_AS(brute_force_optimal(build_sensor_mdp(TransitionKernel(make_params(15, 10, 0.5, 0.5, 0.5))), 0.9),
                    SizeGuardError);
  }
}

TEST_CASE("sweeps contract and values stay in bounds") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10; ++i) {
    const auto p = aoi_edge::testing::random_tiny_params(rng, 6, 20);
    const double gamma = 0.95;
    const auto via = solve(p, gamma, 1e-6);
    REQUIRE(via.converged);
    const auto& d = via.sweep_deltas;
    for (std::size_t n = 1; n < d.size(); ++n) CHECK(d[n] <= gamma * d[n - 1] + 1e-9);
    const double bound = p.cost_weight * p.aoi_max / (1.0 - gamma);
    for (const double v : via.value.values) {
      CHECK(v >= 0.0);
      CHECK(v <= bound + 1e-9);
    }
  }
}

TEST_CASE("value iteration is deterministic") {
  const auto p = make_params(5, 30, 0.1, 0.6, 0.3);
  const auto a = solve(p, 0.99, 1e-3);
  const auto b = solve(p, 0.99, 1e-3);
  CHECK(a.value.values == b.value.values);
  CHECK(a.policy == b.policy);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("solver input validation") {
  const auto mdp = build_sensor_mdp(TransitionKernel(make_params(1, 2, 0.5, 0.5, 0.5)));
  SolverOptions bad;
  bad.discount = 1.0;
  CHECK_THROWS_AS(value_iteration(mdp, bad), ContractError);
  bad.discount = 0.9;
  bad.threshold = 0.0;
  CHECK_THROWS_AS(value_iteration(mdp, bad), ContractError);

  FiniteMdp broken(1);
  broken.add_state();
  const Transition leaky[] = {{0, 0.5, 1.0}};
  broken.add_action(0, leaky);
  CHECK_THROWS_AS(broken.finalize(), ContractError);
}

TEST_CASE("threshold structure checker") {
  const StateSpace space(4, 8);
  std::vector<ActionId> policy(space.size(), 0);
  CHECK(check_threshold_structure(space, policy).passed());

  for (int b = 2; b <= 4; ++b) policy[space.index({b, 5, true})] = 1;
  const auto report = check_threshold_structure(space, policy);
  CHECK_FALSE(report.aoi_monotone);
  CHECK(report.battery_monotone);
  REQUIRE(report.aoi_witness);
  CHECK(report.aoi_witness->first == GridPoint{2, 5});
  CHECK(report.aoi_witness->second == GridPoint{2, 6});

  std::vector<ActionId> only_low(space.size(), 0);
  for (int aoi = 3; aoi <= 8; ++aoi) only_low[space.index({1, aoi, true})] = 1;
  const auto battery = check_threshold_structure(space, only_low);
  CHECK(battery.aoi_monotone);
  CHECK_FALSE(battery.battery_monotone);
  REQUIRE(battery.battery_witness);
  CHECK(battery.battery_witness->first == GridPoint{1, 3});
  CHECK(battery.battery_witness->second == GridPoint{2, 3});

  const auto via = solve(make_params(15, 127, 0.04, 1.0, 0.15), 0.99, 1e-3);
  CHECK(check_threshold_structure(StateSpace(15, 127), via.policy.actions).aoi_monotone);
}

TEST_CASE("value monotonicity checker") {
  const StateSpace space(3, 6);
  std::vector<double> v(space.size(), 4.0);
  CHECK(check_value_monotonicity(space, v).passed());
  for (std::size_t s = 0; s < space.size(); ++s) v[s] = space.state(s).aoi;
  CHECK(check_value_monotonicity(space, v).aoi_nondecreasing);
  v[space.index({1, 3, false})] = 100.0;
  const auto report = check_value_monotonicity(space, v);
  CHECK_FALSE(report.aoi_nondecreasing);
  CHECK_FALSE(report.battery_nonincreasing);
  CHECK_FALSE(report.witness_request);

  const auto via = solve(make_params(6, 20, 0.2, 0.7, 0.4), 0.95, 1e-6);
  CHECK(check_value_monotonicity(StateSpace(6, 20), via.value.values).passed());
}

TEST_CASE("action-value gap checker") {
  const StateSpace space(3, 6);
  QTableExact q{space.size(), 2, std::vector<double>(2 * space.size(), 0.0)};
  for (std::size_t s = 0; s < space.size(); ++s) {
    if (!space.state(s).request) q.values[2 * s + 1] = QTableExact::kInadmissible;
  }
  CHECK(check_delta_q_monotone(space, q).nonincreasing);

  QTableExact rising = q;
  for (std::size_t s = 0; s < space.size(); ++s) {
    if (space.state(s).request) rising.values[2 * s + 1] = space.state(s).aoi;
  }
  const auto report = check_delta_q_monotone(space, rising);
  CHECK_FALSE(report.nonincreasing);
  REQUIRE(report.witness);
  CHECK(report.witness->first == GridPoint{0, 1});
  CHECK(report.witness->second == GridPoint{0, 2});

  const auto via = solve(make_params(8, 40, 0.3, 1.0, 0.5), 0.95, 1e-6);
  CHECK(check_delta_q_monotone(StateSpace(8, 40), via.q).nonincreasing);
}

TEST_CASE("command regions and containment") {
  const StateSpace space(2, 3);
  std::vector<ActionId> policy(space.size(), 0);
  policy[space.index({2, 3, true})] = 1;
  const auto small = command_region(space, policy);
  policy[space.index({1, 3, true})] = 1;
  const auto large = command_region(space, policy);
  CHECK(small.size() == 1);
  CHECK(large.size() == 2);
  CHECK(region_contains(large, small));
  CHECK_FALSE(region_contains(small, large));
}
