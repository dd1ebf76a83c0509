#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "aoi_edge/config.hpp"
#include "aoi_edge/coupled.hpp"
#include "aoi_edge/errors.hpp"
#include "aoi_edge/experiments.hpp"
#include "aoi_edge/qlearning.hpp"
#include "aoi_edge/simulator.hpp"
#include "aoi_edge/structure.hpp"
#include "aoi_edge/value_iteration.hpp"

namespace py = pybind11;
using namespace aoi_edge;

namespace {

SolverOptions solver_options(double discount, double threshold) {
  SolverOptions opts;
  opts.discount = discount;
  opts.threshold = threshold;
  opts.validate();
  return opts;
}

std::vector<Command> to_commands(const std::vector<bool>& flags) {
  std::vector<Command> out;
  for (const bool f : flags) out.push_back(command_from(f));
  return out;
}

std::vector<bool> to_flags(const std::vector<Command>& commands) {
  std::vector<bool> out;
  for (const Command c : commands) out.push_back(c == Command::update);
  return out;
}

py::dict cost_report(const CostReport& r) {
  py::dict d;
  d["policy"] = r.policy;
  d["horizon"] = r.horizon;
  d["episodes"] = r.episodes;
  d["per_sensor_mean"] = r.per_sensor_mean;
  d["per_sensor_std_error"] = r.per_sensor_std_error;
  d["total_mean"] = r.total_mean;
  d["total_std_error"] = r.total_std_error;
  d["episode_totals"] = r.episode_totals;
  return d;
}

EnvConfig make_env(const std::vector<SensorParams>& sensors, std::int64_t horizon, int episodes, std::uint64_t seed,
                   const std::string& observation) {
  EnvConfig env;
  env.sensors = sensors;
  env.horizon = horizon;
  env.episodes = episodes;
  env.seed = seed;
  env.observation = parse_observation_mode(observation);
  env.validate();
  return env;
}

std::unique_ptr<JointPolicy> make_policy(const std::string& name, const std::vector<SensorParams>& sensors,
                                         int battery_threshold, int max_commands, double discount, double threshold) {
  const auto opts = solver_options(discount, threshold);
  auto via = [&] {
    std::vector<StateSpace> spaces;
    std::vector<std::vector<ActionId>> tables;
    for (const auto& p : sensors) {
      spaces.emplace_back(p);
      tables.push_back(solve_sensor(p, opts).result.policy.actions);
    }
    return SensorTablePolicy(std::move(spaces), std::move(tables));
  };
  if (name == "greedy") return std::make_unique<GreedyPolicy>();
  if (name == "greedy-threshold") return std::make_unique<GreedyThresholdPolicy>(battery_threshold);
  if (name == "random") return std::make_unique<RandomPolicy>();
  if (name == "via") return std::make_unique<SensorTablePolicy>(via());
  if (name == "truncation") return std::make_unique<TruncationPolicy>(via(), max_commands);
  if (name == "constrained-greedy") return std::make_unique<ConstrainedGreedyPolicy>(max_commands);
  if (name == "coupled-optimal") {
    return std::make_unique<CoupledTablePolicy>(
        std::make_shared<const CoupledSolution>(coupled_via(sensors, max_commands, opts)));
  }
  throw ContractError("unknown policy '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_aoi_edge, m) {
  m.doc() = "Age-of-information status update control for energy harvesting sensors";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<SizeGuardError>(m, "SizeGuardError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("build_id", [] { return std::string(build_id()); });

  py::class_<SensorParams>(m, "SensorParams")
      .def(py::init([](int battery_capacity, double harvest_prob, double tx_success_prob, double request_prob,
                       int aoi_max, double cost_weight) {
             SensorParams p{battery_capacity, harvest_prob, tx_success_prob, request_prob, aoi_max, cost_weight};
             p.validate();
             return p;
           }),
           py::arg("battery_capacity") = 15, py::arg("harvest_prob") = 0.04, py::arg("tx_success_prob") = 0.15,
           py::arg("request_prob") = 0.15, py::arg("aoi_max") = 127, py::arg("cost_weight") = 1.0)
      .def_readwrite("battery_capacity", &SensorParams::battery_capacity)
      .def_readwrite("harvest_prob", &SensorParams::harvest_prob)
      .def_readwrite("tx_success_prob", &SensorParams::tx_success_prob)
      .def_readwrite("request_prob", &SensorParams::request_prob)
      .def_readwrite("aoi_max", &SensorParams::aoi_max)
      .def_readwrite("cost_weight", &SensorParams::cost_weight)
      .def("violations", &SensorParams::violations)
      .def("__repr__", [](const SensorParams& p) {
        std::ostringstream out;
        out << "SensorParams(battery_capacity=" << p.battery_capacity << ", harvest_prob=" << p.harvest_prob
            << ", tx_success_prob=" << p.tx_success_prob << ", request_prob=" << p.request_prob
            << ", aoi_max=" << p.aoi_max << ", cost_weight=" << p.cost_weight << ")";
        return out.str();
      });

  py::class_<StateSpace>(m, "StateSpace")
      .def(py::init<int, int>(), py::arg("battery_capacity"), py::arg("aoi_max"))
      .def(py::init<const SensorParams&>())
      .def("__len__", &StateSpace::size)
      .def("index",
           [](const StateSpace& s, int battery, int aoi, bool request) { return s.index({battery, aoi, request}); },
           py::arg("battery"), py::arg("aoi"), py::arg("request"))
      .def("state", [](const StateSpace& s, std::size_t i) {
        const auto st = s.state(i);
        return py::make_tuple(st.battery, st.aoi, st.request);
      });

  m.def(
      "transition_distribution",
      [](const SensorParams& p, int battery, int aoi, bool request, bool command) {
        py::list out;
        for (const auto& s : transition_distribution({battery, aoi, request}, command_from(command), p)) {
          out.append(py::make_tuple(py::make_tuple(s.state.battery, s.state.aoi, s.state.request), s.probability));
        }
        return out;
      },
      py::arg("params"), py::arg("battery"), py::arg("aoi"), py::arg("request"), py::arg("command"));

  m.def(
      "solve_sensor",
      [](const SensorParams& p, double discount, double threshold) {
        const auto sol = solve_sensor(p, solver_options(discount, threshold));
        const StateSpace space(p);
        py::dict d;
        d["values"] = sol.result.value.values;
        d["policy"] = sol.result.policy.actions;
        d["iterations"] = sol.result.iterations;
        d["converged"] = sol.result.converged;
        const auto shape = check_threshold_structure(space, sol.result.policy.actions);
        d["threshold_shaped"] = shape.passed();
        d["value_monotone"] = check_value_monotonicity(space, sol.result.value.values).passed();
        std::vector<std::pair<int, int>> region;
        for (const auto& g : command_region(space, sol.result.policy.actions)) region.emplace_back(g.battery, g.aoi);
        d["command_region"] = region;
        return d;
      },
      py::arg("params"), py::arg("discount") = 0.99, py::arg("threshold") = 1e-3,
      "Value iteration for one sensor; the policy is indexed like StateSpace.");

  m.def(
      "simulate",
      [](const std::vector<SensorParams>& sensors, const std::string& policy, std::int64_t horizon, int episodes,
         std::uint64_t seed, const std::string& observation, int battery_threshold, int max_commands,
         double discount, double threshold, int workers) {
        const auto env = make_env(sensors, horizon, episodes, seed, observation);
        const auto p = make_policy(policy, sensors, battery_threshold, max_commands, discount, threshold);
        RunOptions run;
        run.workers = workers;
        CostReport report;
        {
          py::gil_scoped_release release;
          report = run_policy(env, *p, run);
        }
        return cost_report(report);
      },
      py::arg("sensors"), py::arg("policy") = "via", py::arg("horizon") = 100000, py::arg("episodes") = 1,
      py::arg("seed") = 1, py::arg("observation") = "exact", py::arg("battery_threshold") = 1,
      py::arg("max_commands") = 1, py::arg("discount") = 0.99, py::arg("threshold") = 1e-3, py::arg("workers") = 1);

  m.def(
      "train",
      [](const std::vector<SensorParams>& sensors, std::int64_t horizon, const std::string& observation,
         const std::string& schedule, std::uint64_t seed, double discount) {
        if (schedule != "desk" && schedule != "paper") throw ContractError("schedule must be 'desk' or 'paper'");
        auto cfg = schedule == "desk" ? LearnerConfig::desk_schedule() : LearnerConfig::paper_schedule();
        cfg.mode = parse_observation_mode(observation);
        cfg.discount = discount;
        cfg.seed = seed;
        const auto env = make_env(sensors, horizon, 1, seed, observation);
        const auto checkpoints = linear_checkpoints(horizon, 100);
        LearnerRun run;
        {
          py::gil_scoped_release release;
          run = run_learner(env, cfg, horizon, checkpoints);
        }
        py::dict d;
        d["per_sensor_average"] = run.per_sensor_average;
        d["total_average"] = run.total_average;
        d["curve_slots"] = run.curve.slots;
        d["curve_total"] = run.curve.total;
        d["policies"] = greedy_tables(run.tables);
        return d;
      },
      py::arg("sensors"), py::arg("horizon") = 100000, py::arg("observation") = "exact", py::arg("schedule") = "desk",
      py::arg("seed") = 1, py::arg("discount") = 0.99);

  m.def(
      "coupled_via",
      [](const std::vector<SensorParams>& sensors, int max_commands, double discount, double threshold,
         std::size_t state_cap) {
        const auto sol = coupled_via(sensors, max_commands, solver_options(discount, threshold), state_cap);
        std::vector<std::uint32_t> masks;
        for (const ActionId a : sol.policy) masks.push_back(sol.actions.mask(a));
        py::dict d;
        d["values"] = sol.values;
        d["masks"] = masks;
        d["iterations"] = sol.iterations;
        d["converged"] = sol.converged;
        d["num_states"] = sol.space.size();
        d["num_actions"] = sol.actions.size();
        return d;
      },
      py::arg("sensors"), py::arg("max_commands"), py::arg("discount") = 0.99, py::arg("threshold") = 1e-3,
      py::arg("state_cap") = kDefaultProductStateCap);

  m.def(
      "truncate_actions",
      [](const std::vector<bool>& proposed, const std::vector<int>& aois, int max_commands) {
        return to_flags(truncate_actions(to_commands(proposed), aois, max_commands));
      },
      py::arg("proposed"), py::arg("aois"), py::arg("max_commands"));

  m.def(
      "constrained_greedy",
      [](const std::vector<bool>& requests, const std::vector<int>& aois, int max_commands) {
        std::unique_ptr<bool[]> flags(new bool[requests.size()]);
        for (std::size_t i = 0; i < requests.size(); ++i) flags[i] = requests[i];
        return to_flags(constrained_greedy(std::span<const bool>(flags.get(), requests.size()), aois, max_commands));
      },
      py::arg("requests"), py::arg("aois"), py::arg("max_commands"));

  m.def(
      "run_config",
      [](const std::string& config_json, const std::string& output) {
        Json config;
        try {
          config = Json::parse(config_json);
        } catch (const Json::parse_error& e) {
          throw ConfigError({std::string("config: ") + e.what()});
        }
        CliOverrides overrides;
        if (!output.empty()) overrides.output = output;
        const auto spec = validate_config(config, overrides);
        std::ostringstream log;
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(spec, log);
        }
        std::vector<std::string> paths;
        for (const auto& p : result.artifacts) paths.push_back(p.string());
        return paths;
      },
      py::arg("config_json"), py::arg("output") = "",
      "Validates a JSON experiment config, runs it and returns the written artifact paths.");
}
