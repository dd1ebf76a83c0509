#include "aoi_edge/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "aoi_edge/errors.hpp"
#include "aoi_edge/parallel.hpp"

namespace aoi_edge {

double SlotTrace::total_cost() const noexcept {
  double total = 0.0;
  for (const auto& s : sensors) total += s.cost;
  return total;
}

SensorAdvance advance_sensor(const SensorState& s, Command a, const SensorParams& params, const SlotDraws& draws) {
  if (a == Command::update && !s.request) throw ContractError("advance_sensor: command issued without a request");
  SensorAdvance out;
  auto& slot = out.slot;
  slot.request = s.request;
  slot.command = a == Command::update;
  slot.battery_before = s.battery;
  slot.tx = sensor_tx(a, s.battery);
  slot.success = slot.tx && draws.channel < params.tx_success_prob;
  slot.harvest = draws.harvest < params.harvest_prob;
  out.next.battery = battery_step(s.battery, slot.harvest, slot.tx, params.battery_capacity);
  out.next.aoi = aoi_step(s.aoi, slot.success, params.aoi_max);
  slot.aoi_after = out.next.aoi;
  slot.cost = immediate_cost(s.request, params.cost_weight, out.next.aoi);
  out.next.request = draws.request < params.request_prob;
  return out;
}

void check_slot(const SensorSlot& slot, const SensorParams& params) {
  if (slot.tx != (slot.command && slot.battery_before >= 1)) throw ContractError("slot: tx != a * 1{b >= 1}");
  if (slot.success && !slot.tx) throw ContractError("slot: success without transmission");
  if (slot.command && !slot.request) throw ContractError("slot: command without request");
  if (slot.battery_before < 0 || slot.battery_before > params.battery_capacity) {
    throw ContractError("slot: battery outside [0, B]");
  }
  if (slot.aoi_after < 1 || slot.aoi_after > params.aoi_max) throw ContractError("slot: aoi outside [1, aoi_max]");
  if (slot.cost != immediate_cost(slot.request, params.cost_weight, slot.aoi_after)) {
    throw ContractError("slot: cost != r * beta * aoi_next");
  }
}

std::vector<std::string> EnvConfig::violations() const {
  std::vector<std::string> out;
  if (sensors.empty()) out.emplace_back("at least one sensor is required");
  for (std::size_t k = 0; k < sensors.size(); ++k) {
    for (const auto& issue : sensors[k].violations()) {
      out.push_back("sensors[" + std::to_string(k) + "]: " + issue);
    }
    if (initial.battery > sensors[k].battery_capacity || initial.belief > sensors[k].battery_capacity) {
      out.push_back("sensors[" + std::to_string(k) + "]: initial battery exceeds capacity");
    }
    if (initial.aoi > sensors[k].aoi_max) out.push_back("sensors[" + std::to_string(k) + "]: initial aoi exceeds aoi_max");
  }
  if (horizon < 1) out.emplace_back("horizon must be >= 1");
  if (episodes < 1) out.emplace_back("episodes must be >= 1");
  if (initial.aoi < 1) out.emplace_back("initial aoi must be >= 1");
  return out;
}

void EnvConfig::validate() const {
  const auto issues = violations();
  if (issues.empty()) return;
  std::ostringstream msg;
  msg << "invalid environment:";
  for (const auto& issue : issues) msg << ' ' << issue << ';';
  throw ContractError(msg.str());
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t episode, std::uint32_t sensor, RandomSource source) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32), sensor,
                    static_cast<std::uint32_t>(source)};
  return std::mt19937_64(seq);
}

Environment::Environment(const EnvConfig& config, std::uint64_t episode)
    : params_(config.sensors), mode_(config.observation), shared_stream_(!config.common_random_numbers) {
  config.validate();
  const std::size_t k = params_.size();
  if (shared_stream_) {
    engines_.push_back(make_stream(config.seed, episode, 0, RandomSource::request));
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      for (const auto src : {RandomSource::request, RandomSource::harvest, RandomSource::channel}) {
        engines_.push_back(make_stream(config.seed, episode, static_cast<std::uint32_t>(i), src));
      }
    }
  }
  states_.resize(k);
  observations_.resize(k);
  trace_.sensors.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& p = params_[i];
    auto& s = states_[i];
    s.battery = config.initial.battery < 0 ? p.battery_capacity : config.initial.battery;
    s.aoi = config.initial.aoi;
    s.request = uniform01(engine(i, RandomSource::request)) < p.request_prob;
    observations_[i] = {s.battery, s.aoi, s.request};
    if (mode_ == ObservationMode::partial) {
      observations_[i].battery = config.initial.belief < 0 ? p.battery_capacity : config.initial.belief;
    }
  }
}

std::mt19937_64& Environment::engine(std::size_t sensor, RandomSource source) {
  if (shared_stream_) return engines_.front();
  return engines_[3 * sensor + static_cast<std::size_t>(source)];
}

const SlotTrace& Environment::step(std::span<const Command> actions) {
  if (actions.size() != params_.size()) throw ContractError("Environment::step: one command per sensor required");
  ++slot_;
  trace_.slot = slot_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    SlotDraws draws;
    draws.channel = uniform01(engine(i, RandomSource::channel));
    draws.harvest = uniform01(engine(i, RandomSource::harvest));
    draws.request = uniform01(engine(i, RandomSource::request));
    const auto adv = advance_sensor(states_[i], actions[i], params_[i], draws);
#ifndef NDEBUG
    check_slot(adv.slot, params_[i]);
#endif
    const SlotEvents events{adv.slot.tx, adv.slot.success, adv.slot.harvest};
    observations_[i] = observe(mode_, adv.next, events, adv.slot.battery_before, observations_[i]);
    states_[i] = adv.next;
    trace_.sensors[i] = adv.slot;
  }
  return trace_;
}

Command baseline_greedy(const EdgeObservation& obs) noexcept { return command_from(obs.request); }

Command baseline_greedy_threshold(const EdgeObservation& obs, int battery_threshold) noexcept {
  return command_from(obs.request && obs.battery >= battery_threshold);
}

Command baseline_random(const EdgeObservation& obs, std::mt19937_64& rng) {
  if (!obs.request) return Command::hold;
  return command_from(uniform01(rng) < 0.5);
}

void GreedyPolicy::decide(const Environment& env, std::span<Command> out, PolicyContext&) const {
  const auto obs = env.observations();
  for (std::size_t k = 0; k < obs.size(); ++k) out[k] = baseline_greedy(obs[k]);
}

void GreedyThresholdPolicy::decide(const Environment& env, std::span<Command> out, PolicyContext&) const {
  const auto obs = env.observations();
  for (std::size_t k = 0; k < obs.size(); ++k) out[k] = baseline_greedy_threshold(obs[k], threshold_);
}

void RandomPolicy::decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const {
  const auto obs = env.observations();
  for (std::size_t k = 0; k < obs.size(); ++k) out[k] = baseline_random(obs[k], ctx.rng);
}

SensorTablePolicy::SensorTablePolicy(std::vector<StateSpace> spaces, std::vector<std::vector<ActionId>> tables,
                                     std::string name)
    : spaces_(std::move(spaces)), tables_(std::move(tables)), name_(std::move(name)) {
  if (spaces_.size() != tables_.size()) throw ContractError("SensorTablePolicy: one table per sensor required");
  for (std::size_t k = 0; k < spaces_.size(); ++k) {
    if (tables_[k].size() != spaces_[k].size()) throw ContractError("SensorTablePolicy: table size mismatch");
    for (std::size_t s = 0; s < tables_[k].size(); ++s) {
      if (tables_[k][s] > 1 || (tables_[k][s] == 1 && !spaces_[k].state(s).request)) {
        throw ContractError("SensorTablePolicy: inadmissible action in table");
      }
    }
  }
}

Command SensorTablePolicy::action(std::size_t sensor, const EdgeObservation& obs) const {
  return tables_[sensor][spaces_[sensor].index(obs.as_state())] == 1 ? Command::update : Command::hold;
}

void SensorTablePolicy::decide(const Environment& env, std::span<Command> out, PolicyContext&) const {
  const auto obs = env.observations();
  if (obs.size() != tables_.size()) throw ContractError("SensorTablePolicy: sensor count mismatch");
  for (std::size_t k = 0; k < obs.size(); ++k) out[k] = action(k, obs[k]);
}

std::vector<std::int64_t> linear_checkpoints(std::int64_t horizon, std::size_t count) {
  std::vector<std::int64_t> out;
  if (count == 0 || horizon < 1) return out;
  for (std::size_t i = 1; i <= count; ++i) {
    const auto t = static_cast<std::int64_t>((static_cast<long double>(horizon) * i) / count);
    if (t >= 1 && (out.empty() || t > out.back())) out.push_back(t);
  }
  return out;
}

std::pair<double, double> mean_and_std_error(std::span<const double> samples) {
  if (samples.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double x : samples) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

namespace {

struct EpisodeResult {
  std::vector<double> per_sensor;
  std::vector<std::vector<double>> curve;  // [checkpoint][sensor]
};

EpisodeResult run_episode(const EnvConfig& config, const JointPolicy& policy, std::uint64_t episode,
                          const RunOptions& options) {
  Environment env(config, episode);
  PolicyContext ctx{make_stream(config.seed, episode, 0, RandomSource::policy)};
  const std::size_t k = env.num_sensors();
  std::vector<Command> actions(k, Command::hold);
  std::vector<double> sums(k, 0.0);
  EpisodeResult out;
  std::size_t next_checkpoint = 0;
  for (std::int64_t t = 1; t <= config.horizon; ++t) {
    policy.decide(env, actions, ctx);
    const auto& trace = env.step(actions);
    for (std::size_t i = 0; i < k; ++i) sums[i] += trace.sensors[i].cost;
    if (options.on_slot) options.on_slot(episode, trace);
    while (next_checkpoint < options.checkpoints.size() && options.checkpoints[next_checkpoint] == t) {
      std::vector<double> point(k);
      for (std::size_t i = 0; i < k; ++i) point[i] = sums[i] / static_cast<double>(t);
      out.curve.push_back(std::move(point));
      ++next_checkpoint;
    }
  }
  out.per_sensor.resize(k);
  for (std::size_t i = 0; i < k; ++i) out.per_sensor[i] = sums[i] / static_cast<double>(config.horizon);
  return out;
}

}  // namespace

CostReport run_policy(const EnvConfig& config, const JointPolicy& policy, const RunOptions& options) {
  config.validate();
  if (!std::ranges::is_sorted(options.checkpoints) ||
      (!options.checkpoints.empty() && (options.checkpoints.front() < 1 || options.checkpoints.back() > config.horizon))) {
    throw ContractError("run_policy: checkpoints must be sorted slots within the horizon");
  }
  const auto episodes = static_cast<std::size_t>(config.episodes);
  std::vector<EpisodeResult> results(episodes);
  const int workers = options.on_slot ? 1 : options.workers;
  parallel_for(episodes, workers, [&](std::size_t e) { results[e] = run_episode(config, policy, e, options); });

  const std::size_t k = config.sensors.size();
  CostReport report;
  report.policy = policy.name();
  report.horizon = config.horizon;
  report.episodes = config.episodes;
  report.per_sensor_mean.resize(k);
  report.per_sensor_std_error.resize(k);
  for (const auto& r : results) {
    report.episode_per_sensor.push_back(r.per_sensor);
    report.episode_totals.push_back(std::accumulate(r.per_sensor.begin(), r.per_sensor.end(), 0.0));
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> column;
    for (const auto& r : results) column.push_back(r.per_sensor[i]);
    std::tie(report.per_sensor_mean[i], report.per_sensor_std_error[i]) = mean_and_std_error(column);
  }
  std::tie(report.total_mean, report.total_std_error) = mean_and_std_error(report.episode_totals);

  report.curve.slots.assign(options.checkpoints.begin(), options.checkpoints.end());
  for (std::size_t c = 0; c < options.checkpoints.size(); ++c) {
    std::vector<double> point(k, 0.0);
    for (const auto& r : results) {
      for (std::size_t i = 0; i < k; ++i) point[i] += r.curve[c][i] / static_cast<double>(episodes);
    }
    report.curve.total.push_back(std::accumulate(point.begin(), point.end(), 0.0));
    report.curve.per_sensor.push_back(std::move(point));
  }
  return report;
}

}  // namespace aoi_edge
