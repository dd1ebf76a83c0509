#include "aoi_edge/experiments.hpp"

#include <cstdlib>
#include <memory>
#include <sstream>

#include "aoi_edge/coupled.hpp"
#include "aoi_edge/errors.hpp"
#include "aoi_edge/io.hpp"
#include "aoi_edge/parallel.hpp"
#include "aoi_edge/structure.hpp"

namespace aoi_edge {
namespace {

std::string sensor_file(std::size_t k, const char* suffix) { return "sensor_" + std::to_string(k + 1) + suffix; }

class ArtifactSink {
 public:
  ArtifactSink(const ExperimentSpec& spec, std::ostream& log, ExperimentResult& result)
      : root_(spec.output), log_(log), result_(result) {}

  void text(const std::string& name, const std::string& body) {
    write_text(root_ / name, body);
    record(name);
  }
  void json(const std::string& name, const Json& body) {
    write_json(root_ / name, body);
    record(name);
  }
  std::filesystem::path path(const std::string& name) const { return root_ / name; }
  void record(const std::string& name) {
    result_.artifacts.push_back(root_ / name);
    log_ << "wrote " << (root_ / name).string() << '\n';
  }

 private:
  std::filesystem::path root_;
  std::ostream& log_;
  ExperimentResult& result_;
};

std::vector<SensorSolution> solve_all(const std::vector<SensorParams>& sensors, const SolverOptions& options,
                                      int workers) {
  std::vector<SensorSolution> out(sensors.size());
  parallel_for(sensors.size(), workers, [&](std::size_t k) { out[k] = solve_sensor(sensors[k], options); });
  return out;
}

SensorTablePolicy via_policy(const std::vector<SensorSolution>& solutions) {
  std::vector<StateSpace> spaces;
  std::vector<std::vector<ActionId>> tables;
  for (const auto& s : solutions) {
    spaces.emplace_back(s.params);
    tables.push_back(s.result.policy.actions);
  }
  return SensorTablePolicy(std::move(spaces), std::move(tables), "via");
}

Json structure_summary(const SensorSolution& s) {
  const StateSpace space(s.params);
  const auto threshold = check_threshold_structure(space, s.result.policy.actions);
  const auto values = check_value_monotonicity(space, s.result.value.values);
  return Json{{"iterations", s.result.iterations},
              {"converged", s.result.converged},
              {"command_region_size", command_region(space, s.result.policy.actions).size()},
              {"aoi_threshold", threshold.aoi_monotone},
              {"battery_threshold", threshold.battery_monotone},
              {"values_monotone", values.passed()}};
}

void run_solve_via(const ExperimentSpec& spec, const Provenance& prov, ArtifactSink& sink, std::ostream& log) {
  const auto solutions = solve_all(spec.env.sensors, spec.solver, spec.workers);
  Json summary = Json::array();
  for (std::size_t k = 0; k < solutions.size(); ++k) {
    const auto& s = solutions[k];
    sink.json(sensor_file(k, "_policy.json"), policy_to_json(s.params, s.options, s.result, prov));
    sink.text(sensor_file(k, "_grid.csv"), policy_grid_csv(StateSpace(s.params), s.result.policy.actions, prov));
    Json entry = structure_summary(s);
    entry["sensor"] = k + 1;
    log << "sensor " << k + 1 << ": " << s.result.iterations << " sweeps, command region of "
        << entry["command_region_size"] << " cells\n";
    summary.push_back(std::move(entry));
  }
  Json doc{{"format", "aoi_edge.solve_summary"}, {"sensors", summary}};
  stamp(doc, prov);
  sink.json("solve_summary.json", doc);
}

std::unique_ptr<JointPolicy> make_policy(const ExperimentSpec& spec) {
  if (spec.policy == "greedy") return std::make_unique<GreedyPolicy>();
  if (spec.policy == "greedy-threshold") return std::make_unique<GreedyThresholdPolicy>(spec.battery_threshold);
  if (spec.policy == "random") return std::make_unique<RandomPolicy>();
  return std::make_unique<SensorTablePolicy>(via_policy(solve_all(spec.env.sensors, spec.solver, spec.workers)));
}

void run_simulate(const ExperimentSpec& spec, const Provenance& prov, ArtifactSink& sink, std::ostream& log) {
  const auto policy = make_policy(spec);
  RunOptions options;
  options.workers = spec.workers;
  options.checkpoints = linear_checkpoints(spec.env.horizon, spec.checkpoints);
  std::unique_ptr<TraceWriter> trace;
  if (spec.trace) {
    trace = std::make_unique<TraceWriter>(sink.path("trace_episode_0.csv.gz"), prov);
    options.on_slot = [&trace](std::uint64_t episode, const SlotTrace& t) {
      if (episode == 0) trace->write(episode, t);
    };
  }
  const CostReport report = run_policy(spec.env, *policy, options);
  if (trace) {
    trace->close();
    sink.record("trace_episode_0.csv.gz");
  }
  log << report.policy << ": total average cost " << format_real(report.total_mean) << " (std error "
      << format_real(report.total_std_error) << ", " << report.episodes << " episodes)\n";
  sink.json("cost_report.json", cost_report_to_json(report, prov));
  sink.text("running_cost.csv", running_curve_csv(report.curve, prov));
}

void run_train_q(const ExperimentSpec& spec, const Provenance& prov, ArtifactSink& sink, std::ostream& log) {
  const auto episodes = static_cast<std::size_t>(spec.env.episodes);
  const auto checkpoints = linear_checkpoints(spec.env.horizon, spec.checkpoints);
  std::vector<LearnerRun> runs(episodes);
  parallel_for(episodes, spec.workers, [&](std::size_t e) {
    EnvConfig env = spec.env;
    env.seed = spec.env.seed + e;
    LearnerConfig cfg = spec.learner;
    cfg.seed = e + 1;
    runs[e] = run_learner(env, cfg, spec.env.horizon, checkpoints);
  });

  const std::size_t k = spec.env.sensors.size();
  RunningCurve mean;
  mean.slots = runs.front().curve.slots;
  mean.per_sensor.assign(mean.slots.size(), std::vector<double>(k, 0.0));
  mean.total.assign(mean.slots.size(), 0.0);
  std::vector<double> totals;
  std::vector<std::vector<double>> per_sensor(k);
  for (const auto& run : runs) {
    for (std::size_t c = 0; c < mean.slots.size(); ++c) {
      for (std::size_t i = 0; i < k; ++i) mean.per_sensor[c][i] += run.curve.per_sensor[c][i] / episodes;
      mean.total[c] += run.curve.total[c] / episodes;
    }
    totals.push_back(run.total_average);
    for (std::size_t i = 0; i < k; ++i) per_sensor[i].push_back(run.per_sensor_average[i]);
  }
  const auto [total_mean, total_se] = mean_and_std_error(totals);
  std::vector<double> sensor_mean, sensor_se;
  for (const auto& samples : per_sensor) {
    const auto [m, se] = mean_and_std_error(samples);
    sensor_mean.push_back(m);
    sensor_se.push_back(se);
  }
  log << "q-learning (" << to_string(spec.learner.mode) << "): total average cost " << format_real(total_mean)
      << " (std error " << format_real(total_se) << ", " << episodes << " seeds)\n";

  sink.text("learning_curve.csv", running_curve_csv(mean, prov));
  for (std::size_t i = 0; i < k; ++i) {
    sink.json(sensor_file(i, "_qtable.json"), qtable_to_json(spec.env.sensors[i], spec.learner, runs.front().tables[i], prov));
  }
  Json doc{{"format", "aoi_edge.train_report"},
           {"observation", std::string(to_string(spec.learner.mode))},
           {"horizon", spec.env.horizon},
           {"seeds", episodes},
           {"total_mean", total_mean},
           {"total_std_error", total_se},
           {"per_sensor_mean", sensor_mean},
           {"per_sensor_std_error", sensor_se},
           {"seed_totals", totals}};
  stamp(doc, prov);
  sink.json("train_report.json", doc);
}

void run_coupled(const ExperimentSpec& spec, const Provenance& prov, ArtifactSink& sink, std::ostream& log) {
  const auto solutions = solve_all(spec.env.sensors, spec.solver, spec.workers);
  const SensorTablePolicy unconstrained = via_policy(solutions);
  RunOptions options;
  options.workers = spec.workers;

  std::vector<CoupledRow> rows;
  auto add = [&](int m, const JointPolicy& policy) {
    const CostReport r = run_policy(spec.env, policy, options);
    rows.push_back({m, policy.name(), r.total_mean, r.total_std_error, r.episodes});
    log << "M=" << m << " " << policy.name() << ": " << format_real(r.total_mean) << '\n';
  };

  const CostReport lower = run_policy(spec.env, unconstrained, options);
  for (const int m : spec.max_commands) {
    if (spec.coupled_optimal != "off") {
      try {
        auto solution = std::make_shared<const CoupledSolution>(
            coupled_via(spec.env.sensors, m, spec.solver, spec.state_cap));
        add(m, CoupledTablePolicy(solution));
      } catch (const SizeGuardError& e) {
        if (spec.coupled_optimal == "required") throw;
        log << "M=" << m << " coupled-optimal skipped: " << e.what() << '\n';
      }
    }
    add(m, TruncationPolicy(unconstrained, m));
    add(m, ConstrainedGreedyPolicy(m));
    rows.push_back({m, "unconstrained", lower.total_mean, lower.total_std_error, lower.episodes});
  }
  sink.text("coupled.csv", coupled_csv(rows, prov));
}

void run_sweep(const ExperimentSpec& spec, const Provenance& prov, ArtifactSink& sink, std::ostream& log) {
  const bool lambda = spec.sweep_param == "lambda";
  std::vector<SensorParams> points;
  for (const double v : spec.sweep_values) {
    SensorParams p = spec.env.sensors.front();
    (lambda ? p.harvest_prob : p.tx_success_prob) = v;
    points.push_back(p);
  }
  const auto solutions = solve_all(points, spec.solver, spec.workers);
  Json entries = Json::array();
  for (std::size_t i = 0; i < solutions.size(); ++i) {
    const auto& s = solutions[i];
    const StateSpace space(s.params);
    const std::string name = "sweep_" + spec.sweep_param + "_" + std::to_string(i + 1) + "_grid.csv";
    sink.text(name, policy_grid_csv(space, s.result.policy.actions, prov));
    Json entry = structure_summary(s);
    entry["value"] = spec.sweep_values[i];
    entry["grid"] = name;
    if (i + 1 < solutions.size()) {
      const auto here = command_region(space, s.result.policy.actions);
      const auto next = command_region(space, solutions[i + 1].result.policy.actions);
      entry["nested_in_next"] = region_contains(next, here);
    }
    log << spec.sweep_param << "=" << format_real(spec.sweep_values[i]) << ": command region of "
        << entry["command_region_size"] << " cells\n";
    entries.push_back(std::move(entry));
  }
  Json doc{{"format", "aoi_edge.sweep"}, {"param", spec.sweep_param}, {"points", entries}};
  stamp(doc, prov);
  sink.json("sweep.json", doc);
}

void run_export_policy(const ExperimentSpec& spec, const Provenance& prov, ArtifactSink& sink, std::ostream& log) {
  if (!spec.import_from) {
    const auto solutions = solve_all(spec.env.sensors, spec.solver, spec.workers);
    for (std::size_t k = 0; k < solutions.size(); ++k) {
      const auto& s = solutions[k];
      sink.json(sensor_file(k, "_policy.json"), policy_to_json(s.params, s.options, s.result, prov));
    }
    return;
  }
  const ImportedPolicy imported = policy_from_json(read_json(*spec.import_from));
  ViaResult result;
  result.value = imported.value;
  result.policy = imported.policy;
  result.iterations = imported.policy.iterations;
  result.converged = true;
  const Json reexport = policy_to_json(imported.params, imported.options, result, imported.provenance);
  const ImportedPolicy again = policy_from_json(reexport);
  if (!(again.policy == imported.policy) || again.value.values != imported.value.values) {
    throw IoError("policy round trip changed the tables of " + spec.import_from->string());
  }
  sink.json("policy.json", reexport);
  log << "re-exported " << spec.import_from->string() << " (" << imported.policy.actions.size()
      << " states, round trip identical)\n";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  ExperimentResult result;
  ArtifactSink sink(spec, log, result);
  const Provenance prov = Provenance::current(spec.env.seed, spec.resolved);
  switch (spec.mode) {
    case ExperimentMode::solve_via:
      run_solve_via(spec, prov, sink, log);
      break;
    case ExperimentMode::train_q:
      run_train_q(spec, prov, sink, log);
      break;
    case ExperimentMode::simulate:
      run_simulate(spec, prov, sink, log);
      break;
    case ExperimentMode::coupled:
      run_coupled(spec, prov, sink, log);
      break;
    case ExperimentMode::sweep:
      run_sweep(spec, prov, sink, log);
      break;
    case ExperimentMode::export_policy:
      run_export_policy(spec, prov, sink, log);
      break;
  }
  return result;
}

int run_cli(const std::optional<std::filesystem::path>& config_path, CliOverrides overrides, std::ostream& out,
            std::ostream& err) {
  try {
    Json config = Json::object();
    if (config_path) {
      try {
        config = read_json(*config_path);
      } catch (const IoError& e) {
        throw ConfigError({std::string("config: ") + e.what()});
      }
    }
    if (const char* env_out = std::getenv("AOI_EDGE_OUT"); env_out != nullptr && *env_out != '\0') {
      overrides.output = env_out;
    }
    const ExperimentSpec spec = validate_config(config, overrides);
    run_experiment(spec, out);
    return exit_code::ok;
  } catch (const ConfigError& e) {
    err << "invalid configuration:\n";
    for (const auto& issue : e.issues()) err << "  " << issue << '\n';
    return exit_code::config;
  } catch (const SizeGuardError& e) {
    err << "size guard: " << e.what() << '\n';
    return exit_code::size_guard;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::failure;
  }
}

}  // namespace aoi_edge
