#include "aoi_edge/io.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "aoi_edge/errors.hpp"

namespace aoi_edge {
namespace {

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw IoError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("field '") + key + "': " + e.what());
  }
}

Provenance provenance_from(const Json& j) {
  Provenance p;
  if (j.contains("build")) p.build = get<std::string>(j, "build");
  if (j.contains("seed")) p.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("config")) p.config = j.at("config");
  return p;
}

}  // namespace

Provenance Provenance::current(std::uint64_t seed, Json config) {
  return Provenance{build_id(), seed, std::move(config)};
}

void stamp(Json& doc, const Provenance& provenance) {
  doc["build"] = provenance.build;
  doc["seed"] = provenance.seed;
  doc["config"] = provenance.config;
}

Json Provenance::to_json() const { return Json{{"build", build}, {"seed", seed}, {"config", config}}; }

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Json params_to_json(const SensorParams& p) {
  return Json{{"battery_capacity", p.battery_capacity}, {"harvest_prob", p.harvest_prob},
              {"tx_success_prob", p.tx_success_prob},   {"request_prob", p.request_prob},
              {"aoi_max", p.aoi_max},                   {"cost_weight", p.cost_weight}};
}

SensorParams params_from_json(const Json& j) {
  SensorParams p;
  p.battery_capacity = get<int>(j, "battery_capacity");
  p.harvest_prob = get<double>(j, "harvest_prob");
  p.tx_success_prob = get<double>(j, "tx_success_prob");
  p.request_prob = get<double>(j, "request_prob");
  p.aoi_max = get<int>(j, "aoi_max");
  p.cost_weight = get<double>(j, "cost_weight");
  if (const auto issues = p.violations(); !issues.empty()) throw IoError("invalid sensor parameters: " + issues.front());
  return p;
}

Json policy_to_json(const SensorParams& params, const SolverOptions& options, const ViaResult& result,
                    const Provenance& provenance) {
  Json doc{{"format", "aoi_edge.policy"},
           {"params", params_to_json(params)},
           {"gamma", options.discount},
           {"theta", options.threshold},
           {"iterations", result.iterations},
           {"converged", result.converged},
           {"solver", result.policy.solver},
           {"index_order", kIndexOrder},
           {"v", result.value.values},
           {"policy", result.policy.actions}};
  stamp(doc, provenance);
  return doc;
}

ImportedPolicy policy_from_json(const Json& j) {
  if (get<std::string>(j, "format") != "aoi_edge.policy") throw IoError("not a policy document");
  if (get<std::string>(j, "index_order") != kIndexOrder) throw IoError("unsupported index order");
  ImportedPolicy out;
  out.params = params_from_json(j.at("params"));
  out.options.discount = get<double>(j, "gamma");
  out.options.threshold = get<double>(j, "theta");
  out.value.values = get<std::vector<double>>(j, "v");
  out.value.discount = out.options.discount;
  out.value.threshold = out.options.threshold;
  out.policy.actions = get<std::vector<ActionId>>(j, "policy");
  out.policy.solver = get<std::string>(j, "solver");
  out.policy.iterations = get<std::size_t>(j, "iterations");
  out.policy.discount = out.options.discount;
  out.provenance = provenance_from(j);

  const StateSpace space(out.params);
  if (out.value.values.size() != space.size() || out.policy.actions.size() != space.size()) {
    throw IoError("policy document: table size does not match the state space");
  }
  for (std::size_t s = 0; s < space.size(); ++s) {
    const ActionId a = out.policy.actions[s];
    if (a > 1 || (a == 1 && !space.state(s).request)) throw IoError("policy document: inadmissible action");
  }
  return out;
}

Json qtable_to_json(const SensorParams& params, const LearnerConfig& cfg, const QTableLearned& q,
                    const Provenance& provenance) {
  const std::size_t n = q.space().size();
  std::vector<double> hold(n), update(n);
  std::vector<std::uint64_t> visits_hold(n), visits_update(n);
  for (std::size_t s = 0; s < n; ++s) {
    hold[s] = q.value(s, Command::hold);
    update[s] = q.value(s, Command::update);
    visits_hold[s] = q.visits(s, Command::hold);
    visits_update[s] = q.visits(s, Command::update);
  }
  Json doc{{"format", "aoi_edge.qtable"},
           {"params", params_to_json(params)},
           {"gamma", cfg.discount},
           {"observation", std::string(to_string(cfg.mode))},
           {"index_order", kIndexOrder},
           {"q_hold", hold},
           {"q_update", update},
           {"visits_hold", visits_hold},
           {"visits_update", visits_update},
           {"policy", greedy_tables(std::span(&q, 1)).front()}};
  stamp(doc, provenance);
  return doc;
}

Json cost_report_to_json(const CostReport& r, const Provenance& provenance) {
  Json curve{{"slots", r.curve.slots}, {"per_sensor", r.curve.per_sensor}, {"total", r.curve.total}};
  Json doc{{"format", "aoi_edge.cost_report"},
           {"policy", r.policy},
           {"horizon", r.horizon},
           {"episodes", r.episodes},
           {"per_sensor_mean", r.per_sensor_mean},
           {"per_sensor_std_error", r.per_sensor_std_error},
           {"total_mean", r.total_mean},
           {"total_std_error", r.total_std_error},
           {"episode_totals", r.episode_totals},
           {"episode_per_sensor", r.episode_per_sensor},
           {"curve", curve}};
  stamp(doc, provenance);
  return doc;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string provenance_header(const Provenance& provenance) {
  std::ostringstream out;
  out << "# build: " << provenance.build << '\n';
  out << "# seed: " << provenance.seed << '\n';
  out << "# config: " << provenance.config.dump() << '\n';
  return out.str();
}

std::string policy_grid_csv(const StateSpace& space, std::span<const ActionId> policy, const Provenance& provenance) {
  if (policy.size() != space.size()) throw ContractError("policy_grid_csv: policy size mismatch");
  std::ostringstream out;
  out << provenance_header(provenance);
  out << "aoi";
  for (int b = 0; b <= space.battery_capacity(); ++b) out << ",b" << b;
  out << '\n';
  for (int aoi = 1; aoi <= space.aoi_max(); ++aoi) {
    out << aoi;
    for (int b = 0; b <= space.battery_capacity(); ++b) out << ',' << policy[space.index({b, aoi, true})];
    out << '\n';
  }
  return out.str();
}

std::string running_curve_csv(const RunningCurve& curve, const Provenance& provenance) {
  std::ostringstream out;
  out << provenance_header(provenance);
  const std::size_t k = curve.per_sensor.empty() ? 0 : curve.per_sensor.front().size();
  out << "slot";
  for (std::size_t i = 0; i < k; ++i) out << ",sensor_" << i + 1;
  out << ",total\n";
  for (std::size_t c = 0; c < curve.slots.size(); ++c) {
    out << curve.slots[c];
    for (std::size_t i = 0; i < k; ++i) out << ',' << format_real(curve.per_sensor[c][i]);
    out << ',' << format_real(curve.total[c]) << '\n';
  }
  return out.str();
}

std::string coupled_csv(std::span<const CoupledRow> rows, const Provenance& provenance) {
  std::ostringstream out;
  out << provenance_header(provenance);
  out << "M,policy,mean_cost,std_error,episodes\n";
  for (const auto& r : rows) {
    out << r.max_commands << ',' << r.policy << ',' << format_real(r.mean_cost) << ',' << format_real(r.std_error)
        << ',' << r.episodes << '\n';
  }
  return out.str();
}

struct TraceWriter::Impl {
  gzFile file = nullptr;
  std::filesystem::path path;
  std::string buffer;

  void put(const std::string& text) {
    if (text.empty()) return;
    if (gzwrite(file, text.data(), static_cast<unsigned>(text.size())) <= 0) {
      throw IoError("cannot write " + path.string());
    }
  }
};

TraceWriter::TraceWriter(const std::filesystem::path& path, const Provenance& provenance)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  impl_->file = gzopen(path.string().c_str(), "wb");
  if (impl_->file == nullptr) throw IoError("cannot open " + path.string());
  impl_->put(provenance_header(provenance) +
             "episode,slot,sensor,request,command,tx,success,harvest,battery_before,aoi_after,cost\n");
}

TraceWriter::~TraceWriter() {
  if (impl_ && impl_->file != nullptr) gzclose(impl_->file);
}

void TraceWriter::write(std::uint64_t episode, const SlotTrace& trace) {
  auto& buf = impl_->buffer;
  for (std::size_t k = 0; k < trace.sensors.size(); ++k) {
    const auto& s = trace.sensors[k];
    buf += std::to_string(episode) + ',' + std::to_string(trace.slot) + ',' + std::to_string(k + 1) + ',' +
           (s.request ? '1' : '0') + ',' + (s.command ? '1' : '0') + ',' + (s.tx ? '1' : '0') + ',' +
           (s.success ? '1' : '0') + ',' + (s.harvest ? '1' : '0') + ',' + std::to_string(s.battery_before) + ',' +
           std::to_string(s.aoi_after) + ',' + format_real(s.cost) + '\n';
  }
  if (buf.size() > (1u << 16)) {
    impl_->put(buf);
    buf.clear();
  }
}

void TraceWriter::close() {
  if (impl_->file == nullptr) return;
  impl_->put(impl_->buffer);
  impl_->buffer.clear();
  const int rc = gzclose(impl_->file);
  impl_->file = nullptr;
  if (rc != Z_OK) throw IoError("cannot close " + impl_->path.string());
}

}  // namespace aoi_edge
