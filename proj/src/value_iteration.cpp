#include "aoi_edge/value_iteration.hpp"

#include <algorithm>
#include <cmath>

#include "aoi_edge/errors.hpp"

namespace aoi_edge {
namespace {

double row_value(const FiniteMdp& mdp, const FiniteMdp::ActionRow& row, std::span<const double> v,
                 double discount) {
  double total = 0.0;
  for (const auto& t : mdp.transitions(row)) total += t.probability * (t.cost + discount * v[t.next]);
  return total;
}

bool strictly_better(double candidate, double best, double tie_tolerance) {
  return candidate < best - tie_tolerance * std::max(1.0, std::abs(best));
}

void require_finalized(const FiniteMdp& mdp) {
  if (!mdp.finalized()) throw ContractError("solver: MDP must be finalized");
}

bool same_row(const FiniteMdp& mdp, const FiniteMdp::ActionRow& a, const FiniteMdp::ActionRow& b) {
  const auto ta = mdp.transitions(a);
  const auto tb = mdp.transitions(b);
  if (ta.size() != tb.size()) return false;
  auto key = [](const Transition& t) { return t.next; };
  std::vector<Transition> sa(ta.begin(), ta.end());
  std::vector<Transition> sb(tb.begin(), tb.end());
  std::ranges::sort(sa, {}, key);
  std::ranges::sort(sb, {}, key);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i].next != sb[i].next || sa[i].probability != sb[i].probability || sa[i].cost != sb[i].cost) {
      return false;
    }
  }
  return true;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(discount >= 0.0 && discount < 1.0)) throw ContractError("solver: discount must lie in [0,1)");
  if (!(threshold > 0.0)) throw ContractError("solver: threshold must be > 0");
  if (max_sweeps == 0) throw ContractError("solver: max_sweeps must be >= 1");
  if (!(tie_tolerance >= 0.0)) throw ContractError("solver: tie_tolerance must be >= 0");
}

ViaResult value_iteration(const FiniteMdp& mdp, const SolverOptions& options) {
  options.validate();
  require_finalized(mdp);
  const std::size_t n = mdp.num_states();
  std::vector<double> v(n, 0.0);
  std::vector<double> next(n, 0.0);

  ViaResult out;
  while (out.iterations < options.max_sweeps) {
    double delta = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& row : mdp.actions(s)) best = std::min(best, row_value(mdp, row, v, options.discount));
      next[s] = best;
      delta = std::max(delta, std::abs(best - v[s]));
    }
    v.swap(next);
    ++out.iterations;
    out.sweep_deltas.push_back(delta);
    if (delta < options.threshold) {
      out.converged = true;
      break;
    }
  }

  out.q = q_from_v(mdp, v, options.discount);
  out.policy = extract_policy(out.q, options.tie_tolerance);
  out.policy.solver = "value-iteration";
  out.policy.iterations = out.iterations;
  out.policy.discount = options.discount;
  out.value = ValueTable{std::move(v), options.discount, options.threshold};
  return out;
}

QTableExact q_from_v(const FiniteMdp& mdp, std::span<const double> v, double discount) {
  require_finalized(mdp);
  if (v.size() != mdp.num_states()) throw ContractError("q_from_v: value table size mismatch");
  QTableExact q;
  q.num_states = mdp.num_states();
  q.num_actions = mdp.num_action_ids();
  q.values.assign(q.num_states * q.num_actions, QTableExact::kInadmissible);
  for (std::size_t s = 0; s < q.num_states; ++s) {
    for (const auto& row : mdp.actions(s)) q.values[s * q.num_actions + row.id] = row_value(mdp, row, v, discount);
  }
  return q;
}

PolicyTable extract_policy(const QTableExact& q, double tie_tolerance) {
  PolicyTable policy;
  policy.solver = "greedy-q";
  policy.actions.resize(q.num_states);
  for (std::size_t s = 0; s < q.num_states; ++s) {
    bool found = false;
    ActionId best_id = 0;
    double best = QTableExact::kInadmissible;
    for (ActionId a = 0; a < q.num_actions; ++a) {
      const double value = q.at(s, a);
      if (value == QTableExact::kInadmissible) continue;
      if (!found || strictly_better(value, best, tie_tolerance)) {
        best = value;
        best_id = a;
        found = true;
      }
    }
    if (!found) throw ContractError("extract_policy: state without admissible action");
    policy.actions[s] = best_id;
  }
  return policy;
}

ValueTable policy_evaluation(const FiniteMdp& mdp, std::span<const ActionId> policy, double discount,
                             double tolerance) {
  require_finalized(mdp);
  if (!(discount >= 0.0 && discount < 1.0)) throw ContractError("policy_evaluation: discount must lie in [0,1)");
  const std::size_t n = mdp.num_states();
  if (policy.size() != n) throw ContractError("policy_evaluation: policy size mismatch");

  std::vector<const FiniteMdp::ActionRow*> rows(n);
  for (std::size_t s = 0; s < n; ++s) {
    rows[s] = mdp.find(s, policy[s]);
    if (rows[s] == nullptr) throw ContractError("policy_evaluation: policy selects an inadmissible action");
  }

  // Stop once the contraction bound guarantees `tolerance` from the fixed point.
  const double stop = discount > 0.0 ? tolerance * (1.0 - discount) / discount : 0.0;
  std::vector<double> v(n, 0.0);
  std::vector<double> next(n, 0.0);
  for (;;) {
    double delta = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      next[s] = row_value(mdp, *rows[s], v, discount);
      delta = std::max(delta, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (delta <= stop) break;
  }
  return ValueTable{std::move(v), discount, tolerance};
}

BruteForceResult brute_force_optimal(const FiniteMdp& mdp, double discount, std::size_t max_policies) {
  require_finalized(mdp);
  const std::size_t n = mdp.num_states();

  std::vector<std::vector<ActionId>> choices(n);
  std::size_t total = 1;
  for (std::size_t s = 0; s < n; ++s) {
    const auto rows = mdp.actions(s);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      bool duplicate = false;
      for (std::size_t j = 0; j < i && !duplicate; ++j) duplicate = same_row(mdp, rows[i], rows[j]);
      if (!duplicate) choices[s].push_back(rows[i].id);
    }
    total *= choices[s].size();
    if (total > max_policies) throw SizeGuardError("brute_force_optimal: instance admits too many policies");
  }

  std::vector<std::size_t> digits(n, 0);
  std::vector<ActionId> policy(n);
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::size_t>> assignments;
  values.reserve(total);
  assignments.reserve(total);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());

  for (std::size_t k = 0; k < total; ++k) {
    for (std::size_t s = 0; s < n; ++s) policy[s] = choices[s][digits[s]];
    auto v = policy_evaluation(mdp, policy, discount).values;
    for (std::size_t s = 0; s < n; ++s) best[s] = std::min(best[s], v[s]);
    values.push_back(std::move(v));
    assignments.push_back(digits);
    for (std::size_t s = 0; s < n; ++s) {
      if (++digits[s] < choices[s].size()) break;
      digits[s] = 0;
    }
  }

  // Optimal policies form a product set; pick the lowest choice per state.
  auto close = [](double a, double b) { return a <= b + 1e-8 * std::max(1.0, std::abs(b)); };
  std::vector<std::size_t> lowest(n, std::numeric_limits<std::size_t>::max());
  bool any_optimal = false;
  for (std::size_t k = 0; k < total; ++k) {
    bool optimal = true;
    for (std::size_t s = 0; s < n && optimal; ++s) optimal = close(values[k][s], best[s]);
    if (!optimal) continue;
    any_optimal = true;
    for (std::size_t s = 0; s < n; ++s) lowest[s] = std::min(lowest[s], assignments[k][s]);
  }
  if (!any_optimal) throw ContractError("brute_force_optimal: no policy attains the componentwise minimum");

  BruteForceResult out;
  out.policy.actions.resize(n);
  for (std::size_t s = 0; s < n; ++s) out.policy.actions[s] = choices[s][lowest[s]];
  out.values = policy_evaluation(mdp, out.policy.actions, discount).values;
  for (std::size_t s = 0; s < n; ++s) {
    if (!close(out.values[s], best[s])) {
      throw ContractError("brute_force_optimal: optimal policies do not form a product set");
    }
  }
  out.policy.solver = "brute-force";
  out.policy.discount = discount;
  out.policies_evaluated = total;
  return out;
}

SensorSolution solve_sensor(const SensorParams& params, const SolverOptions& options) {
  const TransitionKernel kernel(params);
  const FiniteMdp mdp = build_sensor_mdp(kernel);
  return SensorSolution{params, options, value_iteration(mdp, options)};
}

}  // namespace aoi_edge
