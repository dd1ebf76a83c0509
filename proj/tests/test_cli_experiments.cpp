#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aoi_edge/config.hpp"
#include "aoi_edge/errors.hpp"
#include "aoi_edge/experiments.hpp"

using namespace aoi_edge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("aoi_edge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const Json& j) {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

bool contains(const std::vector<std::string>& issues, const std::string& needle) {
  return std::ranges::any_of(issues, [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

std::vector<std::string> config_issues(const Json& j, const CliOverrides& o = {}) {
  try {
    validate_config(j, o);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

CliOverrides mode(ExperimentMode m) {
  CliOverrides o;
  o.mode = m;
  return o;
}

// Small single-sensor instance so pipelines finish in milliseconds.
Json small_config(const std::string& mode_name) {
  return Json{{"mode", mode_name},
              {"seed", 5},
              {"sensors", {{"count", 1}, {"battery_capacity", 3}, {"aoi_max", 10}, {"harvest_prob", 0.3}}},
              {"solver", {{"threshold", 1e-6}}},
              {"simulation", {{"horizon", 5000}, {"episodes", 2}, {"checkpoints", 5}}}};
}

int run(const Json& config, const fs::path& dir, CliOverrides o = {}) {
  std::ostringstream out, err;
  o.output = dir;
  static int counter = 0;
  const fs::path configs = fs::temp_directory_path() / "aoi_edge_test_configs";
  fs::create_directories(configs);
  const fs::path path = configs / ("config_" + std::to_string(counter++) + ".json");
  std::ofstream(path) << config.dump(2);
  const int code = run_cli(path, o, out, err);
  if (code != 0) MESSAGE(err.str());
  return code;
}

void check_provenance_header(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# build: aoi_edge", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("# seed: ", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("# config: {", 0) == 0);
}

void check_provenance(const Json& doc) {
  CHECK(doc.at("build").get<std::string>().rfind("aoi_edge", 0) == 0);
  CHECK(doc.contains("seed"));
  CHECK(doc.at("config").contains("sensors"));
}

}  // namespace

TEST_CASE("an empty config resolves to the reference defaults") {
  const auto spec = validate_config(Json::object(), mode(ExperimentMode::solve_via));
  REQUIRE(spec.env.sensors.size() == 3);
  for (const auto& s : spec.env.sensors) {
    CHECK(s.battery_capacity == 15);
    CHECK(s.request_prob == 0.15);
    CHECK(s.aoi_max == 127);
    CHECK(s.cost_weight == 1.0);
  }
  CHECK(spec.solver.discount == 0.99);
  CHECK(spec.solver.threshold == 0.001);
  CHECK(spec.learner.epsilon_decay == 1e-7);
  CHECK(spec.learner.alpha_switch == 10'000'000);
  CHECK(spec.max_commands == std::vector<int>{1, 2, 3});
  CHECK(spec.resolved.at("mode") == "solve-via");
  CHECK(contains(config_issues(Json::object()), "mode: required"));
}

TEST_CASE("the desk preset and precedence of sources") {
  const auto desk = validate_config(Json{{"mode", "train-q"}, {"scale", "desk"}});
  CHECK(desk.learner.epsilon_decay == 1e-5);
  CHECK(desk.learner.alpha_switch == 100'000);
  CHECK(desk.env.horizon == 2'000'000);

  const Json doc{{"mode", "train-q"}, {"scale", "desk"}, {"seed", 4}, {"simulation", {{"horizon", 1000}}}};
  const auto file_wins = validate_config(doc);
  CHECK(file_wins.env.horizon == 1000);
  CHECK(file_wins.env.seed == 4);

  CliOverrides o;
  o.seed = 9;
  o.scale = ScalePreset::paper;
  o.mode = ExperimentMode::simulate;
  const auto flags_win = validate_config(doc, o);
  CHECK(flags_win.env.seed == 9);
  CHECK(flags_win.mode == ExperimentMode::simulate);
  CHECK(flags_win.learner.epsilon_decay == 1e-7);
  CHECK(flags_win.env.horizon == 1000);
}

TEST_CASE("configuration errors are itemized") {
  const auto issues = config_issues(Json{{"mode", "solve-via"}, {"sensors", {{"harvest_prob", {0.1, 1.5, 0.2}}}}});
  REQUIRE(issues.size() == 1);
  CHECK(issues.front() == "sensors[1]: harvest_prob out of [0,1]");

  const auto many = config_issues(Json{{"mode", "solve-via"},
                                       {"colour", "blue"},
                                       {"solver", {{"discount", "high"}}},
                                       {"sensors", {{"aoi_max", {1, 2}}}},
                                       {"policy", {{"name", "oracle"}}}});
  CHECK(many.size() == 4);
  CHECK(contains(many, "colour: unknown key"));
  CHECK(contains(many, "solver.discount: expected a number"));
  CHECK(contains(many, "sensors.aoi_max: expected 3 entries"));
  CHECK(contains(many, "policy.name: unknown policy"));

  CHECK(contains(config_issues(Json{{"mode", "coupled"}, {"coupled", {{"M", 4}}}}), "coupled.M"));
  CHECK(contains(config_issues(Json{{"mode", "sail"}}), "unknown mode"));
  CHECK(contains(config_issues(Json{{"mode", "export-policy"}, {"export", {{"from", "/nonexistent/p.json"}}}}),
                 "export.from"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit_codes");
  std::ostringstream out, err;
  CliOverrides o;
  o.output = dir;
  CHECK(run_cli(dir / "missing.json", o, out, err) == exit_code::config);

  Json bad = small_config("solve-via");
  bad["sensors"]["harvest_prob"] = 1.5;
  CHECK(run(bad, dir) == exit_code::config);

  Json huge = small_config("coupled");
  huge["sensors"] = {{"count", 4}};
  huge["coupled"] = {{"M", 1}, {"optimal", "required"}};
  CHECK(run(huge, dir) == exit_code::size_guard);

  const fs::path blocker = dir / "blocker";
  std::ofstream(blocker) << "x";
  CHECK(run(small_config("solve-via"), blocker / "sub") == exit_code::io);
}

TEST_CASE("solve-via artifacts carry provenance") {
  const auto dir = scratch("solve");
  REQUIRE(run(small_config("solve-via"), dir) == 0);
  const auto policy = read_json(dir / "sensor_1_policy.json");
  check_provenance(policy);
  CHECK(policy.at("config").at("seed") == 5);
  check_provenance_header(dir / "sensor_1_grid.csv");
  check_provenance(read_json(dir / "solve_summary.json"));
}

TEST_CASE("policy export round trip") {
  const auto dir = scratch("export");
  REQUIRE(run(small_config("export-policy"), dir) == 0);
  const auto exported = read_json(dir / "sensor_1_policy.json");

  const auto again = scratch("export_again");
  CliOverrides o;
  o.import_from = dir / "sensor_1_policy.json";
  REQUIRE(run(small_config("export-policy"), again, o) == 0);
  const auto reimported = read_json(again / "policy.json");
  CHECK(reimported.at("policy") == exported.at("policy"));
  CHECK(reimported.at("v") == exported.at("v"));

  const auto doc = policy_from_json(exported);
  CHECK(doc.policy.actions == exported.at("policy").get<std::vector<ActionId>>());
  Json broken = exported;
  broken["policy"].erase(0);
  CHECK_THROWS_AS(policy_from_json(broken), IoError);
}

TEST_CASE("greedy-threshold at one reproduces greedy through the pipeline") {
  const auto a = scratch("greedy");
  const auto b = scratch("greedy_threshold");
  CliOverrides greedy;
  greedy.policy = "greedy";
  CliOverrides thresh;
  thresh.policy = "greedy-threshold";
  thresh.battery_threshold = 1;
  REQUIRE(run(small_config("simulate"), a, greedy) == 0);
  REQUIRE(run(small_config("simulate"), b, thresh) == 0);
  const auto ra = read_json(a / "cost_report.json");
  const auto rb = read_json(b / "cost_report.json");
  CHECK(ra.at("episode_totals") == rb.at("episode_totals"));
  CHECK(ra.at("curve") == rb.at("curve"));
  check_provenance(ra);
  check_provenance_header(a / "running_cost.csv");
}

TEST_CASE("train, coupled and sweep pipelines") {
  const auto dir = scratch("pipelines");
  Json train = small_config("train-q");
  train["scale"] = "desk";
  REQUIRE(run(train, dir / "train") == 0);
  check_provenance_header(dir / "train" / "learning_curve.csv");
  check_provenance(read_json(dir / "train" / "sensor_1_qtable.json"));

  Json coupled = small_config("coupled");
  coupled["sensors"] = {{"count", 2}, {"battery_capacity", 2}, {"aoi_max", 5}, {"request_prob", 1.0}};
  REQUIRE(run(coupled, dir / "coupled") == 0);
  std::ifstream csv(dir / "coupled" / "coupled.csv");
  std::string text((std::istreambuf_iterator<char>(csv)), std::istreambuf_iterator<char>());
  CHECK(text.find("M,policy,mean_cost,std_error,episodes") != std::string::npos);
  CHECK(text.find("1,coupled-optimal,") != std::string::npos);
  CHECK(text.find("2,truncation,") != std::string::npos);
  CHECK(text.find("1,constrained-greedy,") != std::string::npos);

  Json sweep = small_config("sweep");
  REQUIRE(run(sweep, dir / "sweep") == 0);
  const auto summary = read_json(dir / "sweep" / "sweep.json");
  check_provenance(summary);
  CHECK(fs::exists(dir / "sweep" / "sweep_lambda_1_grid.csv"));
}

TEST_CASE("the output directory can be redirected by the environment") {
  const auto dir = scratch("env_out");
  const auto target = scratch("env_out_target");
  ::setenv("AOI_EDGE_OUT", target.c_str(), 1);
  const int code = run(small_config("solve-via"), dir);
  ::unsetenv("AOI_EDGE_OUT");
  REQUIRE(code == 0);
  CHECK(fs::exists(target / "sensor_1_policy.json"));
  CHECK_FALSE(fs::exists(dir / "sensor_1_policy.json"));
}

#ifdef AOI_EDGE_CLI_PATH
TEST_CASE("command-line binary") {
  const auto dir = scratch("binary");
  const std::string cli = AOI_EDGE_CLI_PATH;
  const auto config = write_config(dir, small_config("solve-via"));
  const auto quiet = " > " + (dir / "log.txt").string() + " 2>&1";
  CHECK(std::system((cli + " solve-via --config " + config.string() + " --out " + (dir / "o").string() + quiet).c_str()) == 0);
  CHECK(fs::exists(dir / "o" / "sensor_1_grid.csv"));
  const int bad = std::system((cli + " solve-via --no-such-flag" + quiet).c_str());
  CHECK(WEXITSTATUS(bad) == exit_code::config);
}
#endif
