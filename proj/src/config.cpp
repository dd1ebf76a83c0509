#include "aoi_edge/config.hpp"

#include <algorithm>
#include <array>
#include <initializer_list>

#include "aoi_edge/errors.hpp"

namespace aoi_edge {
namespace {

constexpr std::array<std::pair<ExperimentMode, std::string_view>, 6> kModes{{
    {ExperimentMode::solve_via, "solve-via"},
    {ExperimentMode::train_q, "train-q"},
    {ExperimentMode::simulate, "simulate"},
    {ExperimentMode::coupled, "coupled"},
    {ExperimentMode::sweep, "sweep"},
    {ExperimentMode::export_policy, "export-policy"},
}};

constexpr std::array<std::string_view, 4> kPolicies{"via", "greedy", "greedy-threshold", "random"};

// Collects issues while reading an untrusted document.
class Reader {
 public:
  std::vector<std::string> issues;

  void fail(const std::string& path, const std::string& message) { issues.push_back(path + ": " + message); }

  bool object(const Json& j, const std::string& path) {
    if (j.is_object()) return true;
    fail(path, "expected an object");
    return false;
  }

  void allow(const Json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
    for (const auto& [key, _] : j.items()) {
      if (std::ranges::find(keys, key) == keys.end()) fail(join(path, key), "unknown key");
    }
  }

  template <typename T>
  bool read(const Json& j, const std::string& path, const char* key, T& out) {
    if (!j.contains(key)) return false;
    const Json& v = j.at(key);
    if (!typed<T>(v)) {
      fail(join(path, key), std::string("expected ") + type_name<T>());
      return false;
    }
    out = v.get<T>();
    return true;
  }

  static std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
  }

 private:
  template <typename T>
  static bool typed(const Json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      return v.is_boolean();
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v.is_string();
    } else if constexpr (std::is_integral_v<T>) {
      if (v.is_number_integer()) return std::is_signed_v<T> || v.get<std::int64_t>() >= 0;
      // Accept integral floats such as 2e6.
      return v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<std::int64_t>(v.get<double>()));
    } else if constexpr (std::is_floating_point_v<T>) {
      return v.is_number();
    } else {
      return false;
    }
  }

  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    if constexpr (std::is_same_v<T, std::string>) return "a string";
    if constexpr (std::is_integral_v<T>) return "an integer";
    return "a number";
  }
};

// A per-sensor field given either as one value for every sensor or as a list
// with one entry per sensor.
template <typename T>
void read_sensor_field(Reader& rd, const Json& j, const char* key, std::vector<SensorParams>& sensors,
                       T SensorParams::*field) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  const std::string path = Reader::join("sensors", key);
  if (v.is_array()) {
    if (v.size() != sensors.size()) {
      rd.fail(path, "expected " + std::to_string(sensors.size()) + " entries, one per sensor");
      return;
    }
    for (std::size_t k = 0; k < sensors.size(); ++k) {
      if (!v[k].is_number()) {
        rd.fail(path + "[" + std::to_string(k) + "]", "expected a number");
        continue;
      }
      sensors[k].*field = v[k].get<T>();
    }
  } else if (v.is_number()) {
    for (auto& s : sensors) s.*field = v.get<T>();
  } else {
    rd.fail(path, "expected a number or a list of numbers");
  }
}

Json sensors_to_json(const std::vector<SensorParams>& sensors) {
  Json out{{"count", sensors.size()}};
  auto column = [&](auto field) {
    Json col = Json::array();
    for (const auto& s : sensors) col.push_back(s.*field);
    return col;
  };
  out["battery_capacity"] = column(&SensorParams::battery_capacity);
  out["harvest_prob"] = column(&SensorParams::harvest_prob);
  out["tx_success_prob"] = column(&SensorParams::tx_success_prob);
  out["request_prob"] = column(&SensorParams::request_prob);
  out["aoi_max"] = column(&SensorParams::aoi_max);
  out["cost_weight"] = column(&SensorParams::cost_weight);
  return out;
}

Json spec_to_json(const ExperimentSpec& s) {
  Json doc{
      {"mode", std::string(to_string(s.mode))},
      {"scale", std::string(to_string(s.scale))},
      {"seed", s.env.seed},
      {"output", s.output.string()},
      {"workers", s.workers},
      {"sensors", sensors_to_json(s.env.sensors)},
      {"solver", {{"discount", s.solver.discount}, {"threshold", s.solver.threshold}, {"max_sweeps", s.solver.max_sweeps}}},
      {"learner",
       {{"epsilon_floor", s.learner.epsilon_floor},
        {"epsilon_span", s.learner.epsilon_span},
        {"epsilon_decay", s.learner.epsilon_decay},
        {"alpha_high", s.learner.alpha_high},
        {"alpha_low", s.learner.alpha_low},
        {"alpha_switch", s.learner.alpha_switch},
        {"observation", std::string(to_string(s.learner.mode))}}},
      {"simulation",
       {{"horizon", s.env.horizon},
        {"episodes", s.env.episodes},
        {"observation", std::string(to_string(s.env.observation))},
        {"common_random_numbers", s.env.common_random_numbers},
        {"initial_battery", s.env.initial.battery},
        {"initial_aoi", s.env.initial.aoi},
        {"initial_belief", s.env.initial.belief},
        {"checkpoints", s.checkpoints},
        {"trace", s.trace}}},
      {"policy", {{"name", s.policy}, {"battery_threshold", s.battery_threshold}}},
      {"coupled", {{"M", s.max_commands}, {"state_cap", s.state_cap}, {"optimal", s.coupled_optimal}}},
      {"sweep", {{"param", s.sweep_param}, {"values", s.sweep_values}}},
  };
  if (s.import_from) doc["export"] = {{"from", s.import_from->string()}};
  return doc;
}

}  // namespace

std::string_view to_string(ExperimentMode mode) noexcept {
  for (const auto& [m, name] : kModes) {
    if (m == mode) return name;
  }
  return "unknown";
}

std::optional<ExperimentMode> parse_experiment_mode(std::string_view text) noexcept {
  for (const auto& [m, name] : kModes) {
    if (name == text) return m;
  }
  return std::nullopt;
}

std::string_view to_string(ScalePreset preset) noexcept { return preset == ScalePreset::paper ? "paper" : "desk"; }

std::optional<ScalePreset> parse_scale_preset(std::string_view text) noexcept {
  if (text == "paper") return ScalePreset::paper;
  if (text == "desk") return ScalePreset::desk;
  return std::nullopt;
}

PresetValues preset_values(ScalePreset preset) noexcept {
  if (preset == ScalePreset::desk) return {1e-5, 100'000, 2'000'000};
  return {1e-7, 10'000'000, 50'000'000};
}

ExperimentSpec validate_config(const Json& config, const CliOverrides& overrides) {
  Reader rd;
  ExperimentSpec spec;
  const Json empty = Json::object();
  const Json& doc = config.is_null() ? empty : config;
  if (!rd.object(doc, "(root)")) throw ConfigError(rd.issues);
  rd.allow(doc, "", {"mode", "scale", "seed", "output", "workers", "sensors", "solver", "learner", "simulation",
                     "policy", "coupled", "sweep", "export"});

  // Mode and preset come first: the preset fills schedule values that the
  // rest of the document may override.
  std::optional<ExperimentMode> mode;
  if (std::string text; rd.read(doc, "", "mode", text)) {
    mode = parse_experiment_mode(text);
    if (!mode) rd.fail("mode", "unknown mode '" + text + "'");
  }
  if (overrides.mode) mode = overrides.mode;
  if (mode) {
    spec.mode = *mode;
  } else if (!doc.contains("mode")) {
    rd.fail("mode", "required (config key or subcommand)");
  }

  if (std::string text; rd.read(doc, "", "scale", text)) {
    if (auto p = parse_scale_preset(text)) {
      spec.scale = *p;
    } else {
      rd.fail("scale", "expected 'paper' or 'desk'");
    }
  }
  if (overrides.scale) spec.scale = *overrides.scale;
  const PresetValues preset = preset_values(spec.scale);
  spec.learner.epsilon_decay = preset.epsilon_decay;
  spec.learner.alpha_switch = preset.alpha_switch;
  spec.env.horizon = preset.horizon;
  spec.env.episodes = 10;

  rd.read(doc, "", "seed", spec.env.seed);
  if (std::string out; rd.read(doc, "", "output", out)) spec.output = out;
  rd.read(doc, "", "workers", spec.workers);

  // Sensors.
  std::size_t count = 3;
  const Json* sensors = doc.contains("sensors") ? &doc.at("sensors") : nullptr;
  if (sensors && rd.object(*sensors, "sensors")) {
    rd.allow(*sensors, "sensors",
             {"count", "battery_capacity", "harvest_prob", "tx_success_prob", "request_prob", "aoi_max", "cost_weight"});
    if (rd.read(*sensors, "sensors", "count", count) && (count < 1 || count > 64)) {
      rd.fail("sensors.count", "must lie in [1,64]");
      count = 3;
    }
  }
  spec.env.sensors.assign(count, SensorParams{});
  if (count == 3) {
    constexpr std::array<double, 3> kHarvest{0.04, 0.05, 0.06};
    for (std::size_t k = 0; k < 3; ++k) spec.env.sensors[k].harvest_prob = kHarvest[k];
  }
  if (sensors && sensors->is_object()) {
    read_sensor_field(rd, *sensors, "battery_capacity", spec.env.sensors, &SensorParams::battery_capacity);
    read_sensor_field(rd, *sensors, "harvest_prob", spec.env.sensors, &SensorParams::harvest_prob);
    read_sensor_field(rd, *sensors, "tx_success_prob", spec.env.sensors, &SensorParams::tx_success_prob);
    read_sensor_field(rd, *sensors, "request_prob", spec.env.sensors, &SensorParams::request_prob);
    read_sensor_field(rd, *sensors, "aoi_max", spec.env.sensors, &SensorParams::aoi_max);
    read_sensor_field(rd, *sensors, "cost_weight", spec.env.sensors, &SensorParams::cost_weight);
  }
  for (std::size_t k = 0; k < spec.env.sensors.size(); ++k) {
    for (const auto& issue : spec.env.sensors[k].violations()) rd.fail("sensors[" + std::to_string(k) + "]", issue);
  }

  // Solver.
  if (doc.contains("solver") && rd.object(doc.at("solver"), "solver")) {
    const Json& j = doc.at("solver");
    rd.allow(j, "solver", {"discount", "threshold", "max_sweeps"});
    rd.read(j, "solver", "discount", spec.solver.discount);
    rd.read(j, "solver", "threshold", spec.solver.threshold);
    rd.read(j, "solver", "max_sweeps", spec.solver.max_sweeps);
  }
  if (!(spec.solver.discount >= 0.0 && spec.solver.discount < 1.0)) rd.fail("solver.discount", "must lie in [0,1)");
  if (!(spec.solver.threshold > 0.0)) rd.fail("solver.threshold", "must be > 0");
  if (spec.solver.max_sweeps < 1) rd.fail("solver.max_sweeps", "must be >= 1");
  spec.learner.discount = spec.solver.discount;

  // Learner.
  if (doc.contains("learner") && rd.object(doc.at("learner"), "learner")) {
    const Json& j = doc.at("learner");
    rd.allow(j, "learner",
             {"epsilon_floor", "epsilon_span", "epsilon_decay", "alpha_high", "alpha_low", "alpha_switch", "observation"});
    rd.read(j, "learner", "epsilon_floor", spec.learner.epsilon_floor);
    rd.read(j, "learner", "epsilon_span", spec.learner.epsilon_span);
    rd.read(j, "learner", "epsilon_decay", spec.learner.epsilon_decay);
    rd.read(j, "learner", "alpha_high", spec.learner.alpha_high);
    rd.read(j, "learner", "alpha_low", spec.learner.alpha_low);
    rd.read(j, "learner", "alpha_switch", spec.learner.alpha_switch);
    if (std::string text; rd.read(j, "learner", "observation", text)) {
      if (text == "exact" || text == "partial") {
        spec.learner.mode = parse_observation_mode(text);
      } else {
        rd.fail("learner.observation", "expected 'exact' or 'partial'");
      }
    }
  }
  for (const auto& issue : spec.learner.violations()) rd.fail("learner", issue);

  // Simulation.
  if (doc.contains("simulation") && rd.object(doc.at("simulation"), "simulation")) {
    const Json& j = doc.at("simulation");
    rd.allow(j, "simulation",
             {"horizon", "episodes", "observation", "common_random_numbers", "initial_battery", "initial_aoi",
              "initial_belief", "checkpoints", "trace"});
    rd.read(j, "simulation", "horizon", spec.env.horizon);
    rd.read(j, "simulation", "episodes", spec.env.episodes);
    if (std::string text; rd.read(j, "simulation", "observation", text)) {
      if (text == "exact" || text == "partial") {
        spec.env.observation = parse_observation_mode(text);
      } else {
        rd.fail("simulation.observation", "expected 'exact' or 'partial'");
      }
    }
    rd.read(j, "simulation", "common_random_numbers", spec.env.common_random_numbers);
    rd.read(j, "simulation", "initial_battery", spec.env.initial.battery);
    rd.read(j, "simulation", "initial_aoi", spec.env.initial.aoi);
    rd.read(j, "simulation", "initial_belief", spec.env.initial.belief);
    rd.read(j, "simulation", "checkpoints", spec.checkpoints);
    rd.read(j, "simulation", "trace", spec.trace);
  }
  if (spec.checkpoints < 1) rd.fail("simulation.checkpoints", "must be >= 1");

  // Policy.
  if (doc.contains("policy") && rd.object(doc.at("policy"), "policy")) {
    const Json& j = doc.at("policy");
    rd.allow(j, "policy", {"name", "battery_threshold"});
    rd.read(j, "policy", "name", spec.policy);
    rd.read(j, "policy", "battery_threshold", spec.battery_threshold);
  }

  // Coupled.
  if (doc.contains("coupled") && rd.object(doc.at("coupled"), "coupled")) {
    const Json& j = doc.at("coupled");
    rd.allow(j, "coupled", {"M", "state_cap", "optimal"});
    if (j.contains("M")) {
      const Json& m = j.at("M");
      if (m.is_number_integer()) {
        spec.max_commands = {m.get<int>()};
      } else if (m.is_array() && std::ranges::all_of(m, [](const Json& x) { return x.is_number_integer(); })) {
        spec.max_commands = m.get<std::vector<int>>();
      } else {
        rd.fail("coupled.M", "expected an integer or a list of integers");
      }
    }
    rd.read(j, "coupled", "state_cap", spec.state_cap);
    rd.read(j, "coupled", "optimal", spec.coupled_optimal);
  }

  // Sweep.
  if (doc.contains("sweep") && rd.object(doc.at("sweep"), "sweep")) {
    const Json& j = doc.at("sweep");
    rd.allow(j, "sweep", {"param", "values"});
    rd.read(j, "sweep", "param", spec.sweep_param);
    if (j.contains("values")) {
      const Json& v = j.at("values");
      if (v.is_array() && std::ranges::all_of(v, [](const Json& x) { return x.is_number(); })) {
        spec.sweep_values = v.get<std::vector<double>>();
      } else {
        rd.fail("sweep.values", "expected a list of numbers");
      }
    }
  }

  // Export.
  if (doc.contains("export") && rd.object(doc.at("export"), "export")) {
    const Json& j = doc.at("export");
    rd.allow(j, "export", {"from"});
    if (std::string from; rd.read(j, "export", "from", from)) spec.import_from = from;
  }

  // Command-line flags win over the document.
  if (overrides.seed) spec.env.seed = *overrides.seed;
  if (overrides.output) spec.output = *overrides.output;
  if (overrides.workers) spec.workers = *overrides.workers;
  if (overrides.policy) spec.policy = *overrides.policy;
  if (overrides.battery_threshold) spec.battery_threshold = *overrides.battery_threshold;
  if (overrides.max_commands) spec.max_commands = *overrides.max_commands;
  if (overrides.sweep_param) spec.sweep_param = *overrides.sweep_param;
  if (overrides.sweep_values) spec.sweep_values = *overrides.sweep_values;
  if (overrides.import_from) spec.import_from = *overrides.import_from;
  if (overrides.trace) spec.trace = *overrides.trace;

  // Cross-field checks and mode-specific defaults.
  if (spec.workers < 1) rd.fail("workers", "must be >= 1");
  if (spec.env.horizon < 1) rd.fail("simulation.horizon", "must be >= 1");
  if (spec.env.episodes < 1) rd.fail("simulation.episodes", "must be >= 1");
  for (std::size_t k = 0; k < spec.env.sensors.size(); ++k) {
    const auto& p = spec.env.sensors[k];
    if (spec.env.initial.battery > p.battery_capacity || spec.env.initial.belief > p.battery_capacity) {
      rd.fail("simulation", "initial battery or belief exceeds the capacity of sensor " + std::to_string(k + 1));
    }
    if (spec.env.initial.aoi < 1 || spec.env.initial.aoi > p.aoi_max) {
      rd.fail("simulation.initial_aoi", "outside [1, aoi_max] for sensor " + std::to_string(k + 1));
    }
  }
  if (std::ranges::find(kPolicies, spec.policy) == kPolicies.end()) {
    rd.fail("policy.name", "unknown policy '" + spec.policy + "' (via, greedy, greedy-threshold, random)");
  }
  if (spec.battery_threshold < 0) rd.fail("policy.battery_threshold", "must be >= 0");

  const int k_sensors = static_cast<int>(spec.env.sensors.size());
  if (spec.max_commands.empty()) {
    for (int m = 1; m <= k_sensors; ++m) spec.max_commands.push_back(m);
  }
  for (const int m : spec.max_commands) {
    if (m < 0 || m > k_sensors) rd.fail("coupled.M", "values must lie in [0, number of sensors]");
  }
  if (spec.state_cap < 1) rd.fail("coupled.state_cap", "must be >= 1");
  if (spec.coupled_optimal != "auto" && spec.coupled_optimal != "required" && spec.coupled_optimal != "off") {
    rd.fail("coupled.optimal", "expected 'auto', 'required' or 'off'");
  }

  if (spec.sweep_param != "lambda" && spec.sweep_param != "xi") {
    rd.fail("sweep.param", "expected 'lambda' or 'xi'");
  } else if (spec.sweep_values.empty()) {
    spec.sweep_values = spec.sweep_param == "lambda" ? std::vector<double>{0.005, 0.04, 0.08, 1.0}
                                                     : std::vector<double>{0.0, 0.5, 0.7, 1.0};
  }
  for (const double v : spec.sweep_values) {
    if (!(v >= 0.0 && v <= 1.0)) rd.fail("sweep.values", "every value must lie in [0,1]");
  }

  if (spec.import_from) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(*spec.import_from, ec)) {
      rd.fail("export.from", "file not found: " + spec.import_from->string());
    }
  }

  if (!rd.issues.empty()) throw ConfigError(rd.issues);
  spec.resolved = spec_to_json(spec);
  return spec;
}

}  // namespace aoi_edge
