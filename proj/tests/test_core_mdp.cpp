#include <doctest.h>

#include <cmath>
#include <random>

#include "aoi_edge/errors.hpp"
#include "aoi_edge/sensor_model.hpp"
#include "aoi_edge/simulator.hpp"
#include "test_support.hpp"

using namespace aoi_edge;
using aoi_edge::testing::as_map;
using aoi_edge::testing::make_params;
using aoi_edge::testing::StateKey;

TEST_CASE("battery step follows the capped balance") {
  CHECK(battery_step(3, true, true, 15) == 3);
  CHECK(battery_step(15, true, false, 15) == 15);
  CHECK(battery_step(0, false, false, 15) == 0);
  CHECK(battery_step(4, false, true, 15) == 3);
  CHECK(battery_step(0, true, false, 15) == 1);
  CHECK_THROWS_AS(battery_step(0, false, true, 15), ContractError);
  CHECK_THROWS_AS(battery_step(16, false, false, 15), ContractError);
}

TEST_CASE("aoi step resets on success and saturates at the cap") {
  CHECK(aoi_step(5, true, 127) == 1);
  CHECK(aoi_step(5, false, 127) == 6);
  CHECK(aoi_step(127, false, 127) == 127);
  CHECK(aoi_step(1, false, 1) == 1);
  CHECK_THROWS_AS(aoi_step(0, false, 127), ContractError);
}

TEST_CASE("transmission gate and immediate cost") {
  CHECK_FALSE(sensor_tx(Command::update, 0));
  CHECK(sensor_tx(Command::update, 7));
  CHECK_FALSE(sensor_tx(Command::hold, 7));
  CHECK(immediate_cost(true, 1.0, 7) == 7.0);
  CHECK(immediate_cost(false, 1.0, 50) == 0.0);
  CHECK(immediate_cost(true, 0.5, 4) == 2.0);
}

TEST_CASE("parameter validation lists every violation") {
  SensorParams p;
  CHECK(p.violations().empty());
  p.harvest_prob = 1.5;
  p.battery_capacity = 0;
  const auto issues = p.violations();
  REQUIRE(issues.size() == 2);
  CHECK(std::find(issues.begin(), issues.end(), "harvest_prob out of [0,1]") != issues.end());
  CHECK_THROWS_AS(p.validate(), ContractError);
  SensorParams q;
  q.cost_weight = -1.0;
  q.aoi_max = 0;
  CHECK(q.violations().size() == 2);
}

TEST_CASE("state flattening") {
  const StateSpace tiny(1, 2);
  CHECK(tiny.size() == 8);
  CHECK(tiny.index({0, 1, false}) == 0);
  CHECK(tiny.index({0, 1, true}) == 1);
  CHECK(tiny.index({0, 2, false}) == 2);
  CHECK(tiny.index({1, 1, false}) == 4);
  CHECK(StateSpace(15, 127).size() == 4064);

  const StateSpace space(3, 5);
  const auto states = space.enumerate();
  REQUIRE(states.size() == space.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    CHECK(space.index(states[i]) == i);
    CHECK(space.state(i) == states[i]);
  }
  CHECK_FALSE(space.contains({4, 1, false}));
  CHECK_FALSE(space.contains({0, 0, false}));
  CHECK_THROWS_AS(space.index({0, 6, true}), ContractError);
}

TEST_CASE("transition examples") {
  SUBCASE("empty battery under a command") {
    const auto d = as_map(transition_distribution({0, 3, true}, Command::update, make_params(15, 8, 0.3, 0.5, 1.0)));
    REQUIRE(d.size() == 2);
    CHECK(d.at({1, 4, true}) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(d.at({0, 4, true}) == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("transmission from a charged battery") {
    const auto d = as_map(transition_distribution({2, 3, true}, Command::update, make_params(15, 8, 0.2, 0.9, 1.0)));
    REQUIRE(d.size() == 4);
    CHECK(d.at({2, 1, true}) == doctest::Approx(0.18));
    CHECK(d.at({2, 4, true}) == doctest::Approx(0.02));
    CHECK(d.at({1, 1, true}) == doctest::Approx(0.72));
    CHECK(d.at({1, 4, true}) == doctest::Approx(0.08));
  }
  SUBCASE("full battery without a command") {
    const auto p = make_params(4, 8, 0.6, 0.5, 0.0);
    const auto d = as_map(transition_distribution({4, 2, false}, Command::hold, p));
    REQUIRE(d.size() == 1);
    CHECK(d.at({4, 3, false}) == 1.0);
  }
  SUBCASE("hold below capacity splits on harvest and request") {
    const auto d = as_map(transition_distribution({1, 8, true}, Command::hold, make_params(3, 8, 0.25, 0.5, 0.4)));
    REQUIRE(d.size() == 4);
    CHECK(d.at({2, 8, true}) == doctest::Approx(0.25 * 0.4));
    CHECK(d.at({1, 8, false}) == doctest::Approx(0.75 * 0.6));
  }
  SUBCASE("command without a request is rejected") {
    CHECK_THROWS_AS(transition_distribution({1, 1, false}, Command::update, SensorParams{}), ContractError);
  }
}

// Probability of every successor obtained by enumerating the eight joint
// outcomes of (channel, harvest, request) and stepping the slot protocol.
static std::map<StateKey, double> enumerate_protocol(const SensorState& s, Command a, const SensorParams& p) {
  std::map<StateKey, double> out;
  for (int h = 0; h < 2; ++h) {
    for (int e = 0; e < 2; ++e) {
      for (int r = 0; r < 2; ++r) {
        const bool tx = sensor_tx(a, s.battery);
        double prob = (e ? p.harvest_prob : 1.0 - p.harvest_prob) * (r ? p.request_prob : 1.0 - p.request_prob);
        if (tx) {
          prob *= h ? p.tx_success_prob : 1.0 - p.tx_success_prob;
        } else if (h) {
          continue;  // no transmission, no channel outcome
        }
        if (prob == 0.0) continue;
        const SlotDraws draws{h ? 0.0 : 1.0, e ? 0.0 : 1.0, r ? 0.0 : 1.0};
        const auto next = advance_sensor(s, a, p, draws).next;
        out[aoi_edge::testing::key(next)] += prob;
      }
    }
  }
  return out;
}

TEST_CASE("kernel is stochastic, closed and matches the slot protocol") {
  std::mt19937_64 rng(20240611);
  std::vector<SensorParams> cases{make_params(2, 4, 0.3, 0.8, 0.5), make_params(1, 2, 1.0, 1.0, 1.0),
                                  make_params(3, 5, 0.0, 0.0, 0.0), make_params(2, 3, 1.0, 0.0, 0.5)};
  for (int i = 0; i < 20; ++i) cases.push_back(aoi_edge::testing::random_tiny_params(rng, 3, 5));

  for (const auto& p : cases) {
    const TransitionKernel kernel(p);
    const auto& space = kernel.space();
    for (std::size_t s = 0; s < space.size(); ++s) {
      const SensorState st = space.state(s);
      for (const Command a : {Command::hold, Command::update}) {
        if (a == Command::update && !st.request) {
          CHECK_FALSE(kernel.admissible(s, a));
          CHECK_THROWS_AS(kernel.row(s, a), ContractError);
          continue;
        }
        const auto row = kernel.row(s, a);
        CHECK(row.size() <= TransitionKernel::kMaxSuccessors);
        double total = 0.0;
        std::map<StateKey, double> from_kernel;
        for (const auto& e : row) {
          CHECK(e.probability > 0.0);
          CHECK(e.probability <= 1.0);
          REQUIRE(e.next < space.size());
          total += e.probability;
          from_kernel[aoi_edge::testing::key(space.state(e.next))] += e.probability;
        }
        CHECK(std::abs(total - 1.0) <= TransitionKernel::kStochasticTolerance);
        const auto from_protocol = enumerate_protocol(st, a, p);
        REQUIRE(from_protocol.size() == from_kernel.size());
        for (const auto& [k, prob] : from_protocol) {
          REQUIRE(from_kernel.count(k) == 1);
          CHECK(from_kernel.at(k) == doctest::Approx(prob).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("monte carlo successor frequencies agree with the kernel") {
  const auto p = make_params(2, 4, 0.35, 0.7, 0.45);
  const TransitionKernel kernel(p);
  const auto& space = kernel.space();
  constexpr int kDraws = 20000;
  std::mt19937_64 rng(99);
  for (const SensorState st : {SensorState{0, 2, true}, SensorState{1, 4, true}, SensorState{2, 1, false}}) {
    for (const Command a : {Command::hold, Command::update}) {
      if (a == Command::update && !st.request) continue;
      std::map<std::size_t, int> counts;
      for (int i = 0; i < kDraws; ++i) {
        const SlotDraws d{uniform01(rng), uniform01(rng), uniform01(rng)};
        ++counts[space.index(advance_sensor(st, a, p, d).next)];
      }
      int covered = 0;
      for (const auto& e : kernel.row(space.index(st), a)) {
        const double freq = counts[e.next] / static_cast<double>(kDraws);
        const double sigma = std::sqrt(e.probability * (1.0 - e.probability) / kDraws);
        CHECK(std::abs(freq - e.probability) <= 3.0 * sigma + 1e-12);
        covered += counts[e.next];
      }
      CHECK(covered == kDraws);
    }
  }
}
