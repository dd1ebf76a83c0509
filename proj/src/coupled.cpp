#include "aoi_edge/coupled.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "aoi_edge/errors.hpp"

namespace aoi_edge {
namespace {

std::vector<bool> request_support(const SensorParams& p) {
  if (p.request_prob <= 0.0) return {false};
  if (p.request_prob >= 1.0) return {true};
  return {false, true};
}

// Per-sensor kernel over the reduced local space. The command row of a
// no-request state mirrors the hold row so that axis contractions stay
// defined; admissibility is enforced by the caller.
struct LocalModel {
  struct Entry {
    std::uint32_t next;
    double probability;
    double cost;
  };

  std::vector<std::uint32_t> offsets;  // 2 * n + 1
  std::vector<Entry> entries;
  std::vector<double> expected_cost;  // 2 * n
  std::vector<bool> request;

  std::span<const Entry> row(std::size_t local, int a) const {
    const std::size_t slot = 2 * local + static_cast<std::size_t>(a);
    return {entries.data() + offsets[slot], entries.data() + offsets[slot + 1]};
  }
};

LocalModel build_local_model(const CoupledSpace& space, std::size_t k) {
  const auto& p = space.params()[k];
  LocalModel model;
  const std::size_t n = space.local_size(k);
  model.offsets.push_back(0);
  model.request.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SensorState s = space.local_state(k, i);
    model.request[i] = s.request;
    for (const Command a : {Command::hold, Command::update}) {
      const Command effective = (a == Command::update && !s.request) ? Command::hold : a;
      double expected = 0.0;
      for (const auto& succ : transition_distribution(s, effective, p)) {
        const double cost = immediate_cost(s.request, p.cost_weight, succ.state.aoi);
        model.entries.push_back({static_cast<std::uint32_t>(space.local_index(k, succ.state)), succ.probability, cost});
        expected += succ.probability * cost;
      }
      model.expected_cost.push_back(expected);
      model.offsets.push_back(static_cast<std::uint32_t>(model.entries.size()));
    }
  }
  return model;
}

std::vector<LocalModel> build_local_models(const CoupledSpace& space) {
  std::vector<LocalModel> out;
  for (std::size_t k = 0; k < space.num_sensors(); ++k) out.push_back(build_local_model(space, k));
  return out;
}

// Flat table of local indices, [state * K + k].
std::vector<std::uint32_t> local_index_table(const CoupledSpace& space) {
  const std::size_t K = space.num_sensors();
  std::vector<std::uint32_t> out(space.size() * K);
  for (std::size_t s = 0; s < space.size(); ++s) {
    for (std::size_t k = 0; k < K; ++k) {
      out[s * K + k] = static_cast<std::uint32_t>((s / space.stride(k)) % space.local_size(k));
    }
  }
  return out;
}

std::uint32_t request_mask_of(const std::vector<LocalModel>& models, std::span<const std::uint32_t> locals) {
  std::uint32_t mask = 0;
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (models[k].request[locals[k]]) mask |= 1u << k;
  }
  return mask;
}

// out = (I x .. x P_k^a x .. x I) in along axis k.
void contract_axis(const CoupledSpace& space, const LocalModel& model, std::size_t k, int a,
                   std::span<const double> in, std::span<double> out) {
  const std::size_t n = space.local_size(k);
  const std::size_t stride = space.stride(k);
  const std::size_t block = n * stride;
  const std::size_t outer = space.size() / block;
  for (std::size_t p = 0; p < outer; ++p) {
    const std::size_t base = p * block;
    for (std::size_t i = 0; i < n; ++i) {
      double* dst = out.data() + base + i * stride;
      std::fill(dst, dst + stride, 0.0);
      for (const auto& e : model.row(i, a)) {
        const double* src = in.data() + base + e.next * stride;
        for (std::size_t q = 0; q < stride; ++q) dst[q] += e.probability * src[q];
      }
    }
  }
}

}  // namespace

CoupledSpace::CoupledSpace(std::span<const SensorParams> params, std::size_t state_cap)
    : params_(params.begin(), params.end()) {
  if (params_.empty()) throw ContractError("CoupledSpace: at least one sensor is required");
  if (params_.size() > 31) throw ContractError("CoupledSpace: at most 31 sensors");
  long double total = 1.0L;
  for (const auto& p : params_) {
    p.validate();
    request_values_.push_back(request_support(p));
    const std::size_t local = static_cast<std::size_t>(p.battery_capacity + 1) * static_cast<std::size_t>(p.aoi_max) *
                              request_values_.back().size();
    local_sizes_.push_back(local);
    total *= static_cast<long double>(local);
  }
  if (total > static_cast<long double>(state_cap)) {
    char count[32];
    std::snprintf(count, sizeof count, "%.3Lg", total);
    throw SizeGuardError(std::string("product state space of ") + count + " states exceeds the cap of " +
                         std::to_string(state_cap));
  }
  size_ = static_cast<std::size_t>(total);
  strides_.assign(params_.size(), 1);
  for (std::size_t k = params_.size() - 1; k > 0; --k) strides_[k - 1] = strides_[k] * local_sizes_[k];
}

bool CoupledSpace::contains_local(std::size_t k, const SensorState& s) const noexcept {
  const auto& p = params_[k];
  if (s.battery < 0 || s.battery > p.battery_capacity || s.aoi < 1 || s.aoi > p.aoi_max) return false;
  return std::ranges::find(request_values_[k], s.request) != request_values_[k].end();
}

std::size_t CoupledSpace::local_index(std::size_t k, const SensorState& s) const {
  if (!contains_local(k, s)) throw ContractError("CoupledSpace: sensor state outside the reachable domain");
  const auto& values = request_values_[k];
  const std::size_t r = static_cast<std::size_t>(std::ranges::find(values, s.request) - values.begin());
  return (static_cast<std::size_t>(s.battery) * static_cast<std::size_t>(params_[k].aoi_max) +
          static_cast<std::size_t>(s.aoi - 1)) *
             values.size() +
         r;
}

SensorState CoupledSpace::local_state(std::size_t k, std::size_t local) const {
  if (local >= local_sizes_[k]) throw ContractError("CoupledSpace: local index out of range");
  const auto& values = request_values_[k];
  const bool request = values[local % values.size()];
  local /= values.size();
  const auto amax = static_cast<std::size_t>(params_[k].aoi_max);
  return {static_cast<int>(local / amax), static_cast<int>(local % amax) + 1, request};
}

std::size_t CoupledSpace::index(std::span<const SensorState> states) const {
  if (states.size() != params_.size()) throw ContractError("CoupledSpace::index: one state per sensor required");
  std::size_t out = 0;
  for (std::size_t k = 0; k < states.size(); ++k) out += local_index(k, states[k]) * strides_[k];
  return out;
}

std::vector<SensorState> CoupledSpace::state(std::size_t index) const {
  if (index >= size_) throw ContractError("CoupledSpace::state: index out of range");
  std::vector<SensorState> out;
  for (std::size_t k = 0; k < params_.size(); ++k) out.push_back(local_state(k, (index / strides_[k]) % local_sizes_[k]));
  return out;
}

JointActionSet::JointActionSet(std::size_t num_sensors, int max_commands)
    : num_sensors_(num_sensors), max_commands_(max_commands) {
  if (num_sensors == 0 || num_sensors > 20) throw ContractError("JointActionSet: 1..20 sensors supported");
  if (max_commands < 0) throw ContractError("JointActionSet: max_commands must be >= 0");
  const std::uint32_t count = 1u << num_sensors;
  for (std::uint32_t m = 0; m < count; ++m) {
    if (std::popcount(m) <= max_commands) masks_.push_back(m);
  }
  std::ranges::stable_sort(masks_, {}, [](std::uint32_t m) { return std::popcount(m); });
  ids_.assign(count, -1);
  for (std::size_t i = 0; i < masks_.size(); ++i) ids_[masks_[i]] = static_cast<std::int64_t>(i);
}

ActionId JointActionSet::id(std::uint32_t mask) const {
  if (mask >= ids_.size() || ids_[mask] < 0) throw ContractError("JointActionSet: joint command exceeds the limit");
  return static_cast<ActionId>(ids_[mask]);
}

std::vector<Command> JointActionSet::commands(ActionId id) const {
  const std::uint32_t m = mask(id);
  std::vector<Command> out(num_sensors_);
  for (std::size_t k = 0; k < num_sensors_; ++k) out[k] = command_from((m >> k) & 1u);
  return out;
}

std::vector<CoupledSuccessor> coupled_kernel(std::span<const SensorState> states, std::span<const Command> actions,
                                             std::span<const SensorParams> params, int max_commands) {
  const std::size_t K = params.size();
  if (states.size() != K || actions.size() != K) throw ContractError("coupled_kernel: one state and command per sensor");
  const auto commanded = std::ranges::count(actions, Command::update);
  if (commanded > max_commands) throw ContractError("coupled_kernel: joint command exceeds the transmission limit");

  std::vector<std::vector<Successor>> marginals;
  for (std::size_t k = 0; k < K; ++k) marginals.push_back(transition_distribution(states[k], actions[k], params[k]));

  std::vector<CoupledSuccessor> out;
  std::vector<std::size_t> digits(K, 0);
  for (;;) {
    CoupledSuccessor succ{{}, 1.0, 0.0};
    for (std::size_t k = 0; k < K; ++k) {
      const auto& m = marginals[k][digits[k]];
      succ.state.push_back(m.state);
      succ.probability *= m.probability;
      succ.cost += immediate_cost(states[k].request, params[k].cost_weight, m.state.aoi);
    }
    out.push_back(std::move(succ));
    std::size_t k = 0;
    for (; k < K; ++k) {
      if (++digits[k] < marginals[k].size()) break;
      digits[k] = 0;
    }
    if (k == K) break;
  }
  return out;
}

FiniteMdp build_coupled_mdp(std::span<const SensorParams> params, int max_commands, std::size_t state_cap) {
  const CoupledSpace space(params, state_cap);
  const JointActionSet actions(params.size(), max_commands);
  const auto models = build_local_models(space);
  const std::size_t K = params.size();

  FiniteMdp mdp(actions.size());
  std::vector<std::uint32_t> locals(K);
  std::vector<Transition> buffer;
  std::vector<std::size_t> digits(K);
  for (std::size_t s = 0; s < space.size(); ++s) {
    mdp.add_state();
    for (std::size_t k = 0; k < K; ++k) locals[k] = static_cast<std::uint32_t>((s / space.stride(k)) % space.local_size(k));
    const std::uint32_t requested = request_mask_of(models, locals);
    for (ActionId id = 0; id < actions.size(); ++id) {
      const std::uint32_t mask = actions.mask(id);
      if ((mask & ~requested) != 0) continue;
      buffer.clear();
      std::ranges::fill(digits, 0);
      for (;;) {
        Transition t{0, 1.0, 0.0};
        std::size_t next = 0;
        for (std::size_t k = 0; k < K; ++k) {
          const auto& e = models[k].row(locals[k], static_cast<int>((mask >> k) & 1u))[digits[k]];
          next += e.next * space.stride(k);
          t.probability *= e.probability;
          t.cost += e.cost;
        }
        t.next = static_cast<std::uint32_t>(next);
        buffer.push_back(t);
        std::size_t k = 0;
        for (; k < K; ++k) {
          if (++digits[k] < models[k].row(locals[k], static_cast<int>((mask >> k) & 1u)).size()) break;
          digits[k] = 0;
        }
        if (k == K) break;
      }
      mdp.add_action(id, buffer);
    }
  }
  mdp.finalize();
  return mdp;
}

CoupledSolution coupled_via(std::span<const SensorParams> params, int max_commands, const SolverOptions& options,
                            std::size_t state_cap) {
  options.validate();
  CoupledSolution sol{CoupledSpace(params, state_cap), JointActionSet(params.size(), max_commands), options, {}, {}, 0,
                      false};
  const auto& space = sol.space;
  const auto& actions = sol.actions;
  const std::size_t N = space.size();
  const std::size_t K = space.num_sensors();
  const auto models = build_local_models(space);
  const auto locals = local_index_table(space);

  std::vector<std::uint32_t> requested(N);
  for (std::size_t s = 0; s < N; ++s) requested[s] = request_mask_of(models, {locals.data() + s * K, K});

  std::vector<double> v(N, 0.0);
  std::vector<double> best(N);
  std::vector<double> work_a(N);
  std::vector<double> work_b(N);

  // Calls fn(s, q) for every admissible (s, id) in ascending id order.
  auto backup = [&](auto&& fn) {
    for (ActionId id = 0; id < actions.size(); ++id) {
      const std::uint32_t mask = actions.mask(id);
      std::ranges::copy(v, work_a.begin());
      for (std::size_t k = 0; k < K; ++k) {
        contract_axis(space, models[k], k, static_cast<int>((mask >> k) & 1u), work_a, work_b);
        work_a.swap(work_b);
      }
      for (std::size_t s = 0; s < N; ++s) {
        if ((mask & ~requested[s]) != 0) continue;
        double cost = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          cost += models[k].expected_cost[2 * locals[s * K + k] + ((mask >> k) & 1u)];
        }
        fn(s, id, cost + options.discount * work_a[s]);
      }
    }
  };

  while (sol.iterations < options.max_sweeps) {
    std::ranges::fill(best, std::numeric_limits<double>::infinity());
    backup([&](std::size_t s, ActionId, double q) { best[s] = std::min(best[s], q); });
    double delta = 0.0;
    for (std::size_t s = 0; s < N; ++s) delta = std::max(delta, std::abs(best[s] - v[s]));
    v.swap(best);
    ++sol.iterations;
    if (delta < options.threshold) {
      sol.converged = true;
      break;
    }
  }

  sol.policy.assign(N, 0);
  std::ranges::fill(best, std::numeric_limits<double>::infinity());
  backup([&](std::size_t s, ActionId id, double q) {
    if (q < best[s] - options.tie_tolerance * std::max(1.0, std::abs(best[s])) || best[s] == std::numeric_limits<double>::infinity()) {
      best[s] = q;
      sol.policy[s] = id;
    }
  });
  sol.values = std::move(v);
  return sol;
}

std::vector<Command> truncate_actions(std::span<const Command> proposed, std::span<const int> aois, int max_commands) {
  if (proposed.size() != aois.size()) throw ContractError("truncate_actions: one AoI per sensor required");
  if (max_commands < 0) throw ContractError("truncate_actions: max_commands must be >= 0");
  std::vector<std::size_t> selected;
  for (std::size_t k = 0; k < proposed.size(); ++k) {
    if (proposed[k] == Command::update) selected.push_back(k);
  }
  std::vector<Command> out(proposed.begin(), proposed.end());
  if (selected.size() <= static_cast<std::size_t>(max_commands)) return out;
  std::ranges::stable_sort(selected, [&](std::size_t a, std::size_t b) { return aois[a] > aois[b]; });
  for (std::size_t i = static_cast<std::size_t>(max_commands); i < selected.size(); ++i) out[selected[i]] = Command::hold;
  return out;
}

std::vector<Command> constrained_greedy(std::span<const bool> requests, std::span<const int> aois, int max_commands) {
  if (requests.size() != aois.size()) throw ContractError("constrained_greedy: one AoI per sensor required");
  std::vector<Command> proposed(requests.size());
  for (std::size_t k = 0; k < requests.size(); ++k) proposed[k] = command_from(requests[k]);
  return truncate_actions(proposed, aois, max_commands);
}

TruncationPolicy::TruncationPolicy(SensorTablePolicy base, int max_commands)
    : base_(std::move(base)), max_commands_(max_commands) {
  if (max_commands < 0) throw ContractError("TruncationPolicy: max_commands must be >= 0");
}

void TruncationPolicy::decide(const Environment& env, std::span<Command> out, PolicyContext& ctx) const {
  base_.decide(env, out, ctx);
  std::vector<int> aois;
  for (const auto& o : env.observations()) aois.push_back(o.aoi);
  const auto kept = truncate_actions(out, aois, max_commands_);
  std::ranges::copy(kept, out.begin());
}

void ConstrainedGreedyPolicy::decide(const Environment& env, std::span<Command> out, PolicyContext&) const {
  std::vector<bool> requests;
  std::vector<int> aois;
  for (const auto& o : env.observations()) {
    requests.push_back(o.request);
    aois.push_back(o.aoi);
  }
  // std::vector<bool> has no contiguous storage; copy into a plain buffer.
  std::unique_ptr<bool[]> flags(new bool[requests.size()]);
  for (std::size_t k = 0; k < requests.size(); ++k) flags[k] = requests[k];
  const auto chosen = constrained_greedy({flags.get(), requests.size()}, aois, max_commands_);
  std::ranges::copy(chosen, out.begin());
}

CoupledTablePolicy::CoupledTablePolicy(std::shared_ptr<const CoupledSolution> solution)
    : solution_(std::move(solution)) {
  if (!solution_) throw ContractError("CoupledTablePolicy: null solution");
}

void CoupledTablePolicy::decide(const Environment& env, std::span<Command> out, PolicyContext&) const {
  if (env.mode() != ObservationMode::exact) throw ContractError("CoupledTablePolicy: requires exact battery knowledge");
  const std::size_t s = solution_->space.index(env.states());
  const auto commands = solution_->actions.commands(solution_->policy[s]);
  std::ranges::copy(commands, out.begin());
}

}  // namespace aoi_edge
