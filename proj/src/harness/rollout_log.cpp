#include "spmpc/harness.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace spmpc::harness {

namespace {

json state_json(const sim::BoatState& s) {
  return json::array({s.x, s.y, s.speed, s.heading, s.rel_wind_speed, s.rel_wind_dir});
}

sim::BoatState state_from(const json& j) {
  if (!j.is_array() || j.size() != 6) throw std::runtime_error("log: malformed state");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>(), j[4].get<double>(), j[5].get<double>()};
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vecs_json(const std::vector<Vec>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(vec_json(v));
  return a;
}

std::vector<Vec> vecs_from(const json& j) {
  std::vector<Vec> out;
  for (const auto& e : j) out.push_back(vec_from(e));
  return out;
}

}  // namespace

void write_log(const RolloutLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write log " + path);
  out << json{{"type", "header"},      {"schema_version", kLogSchemaVersion}, {"kind", log.kind},
              {"iteration", log.iteration}, {"rollout", log.rollout},      {"sim_seed", log.sim_seed}}
             .dump()
      << '\n';
  for (const auto& r : log.steps) {
    json j{{"type", "step"},
           {"index", r.index},
           {"observed", state_json(r.observed)},
           {"compensated", state_json(r.compensated)},
           {"control", vec_json(r.control)},
           {"next", state_json(r.next)},
           {"cost", r.cost},
           {"distance", r.distance},
           {"optimizer_time_s", r.optimizer_time_s},
           {"iterations", r.iterations},
           {"propagation_clamps", r.propagation_clamps},
           {"actuator_clamps", r.actuator_clamps},
           {"warning", r.warning}};
    if (!r.ticks.empty()) j["ticks"] = vecs_json(r.ticks);
    if (!r.predicted_mean.empty()) {
      j["predicted_mean"] = vecs_json(r.predicted_mean);
      j["predicted_variance"] = vecs_json(r.predicted_variance);
    }
    out << j.dump() << '\n';
  }
  out << json{{"type", "summary"},
              {"steps", log.steps.size()},
              {"aborted", log.aborted},
              {"error", log.error},
              {"mean_last_distance", log.mean_last_distance},
              {"total_samples", log.total_samples}}
             .dump()
      << '\n';
}

RolloutLog read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log " + path);
  RolloutLog log;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type");
    if (type == "header") {
      if (j.at("schema_version").get<int>() != kLogSchemaVersion) throw std::runtime_error("log: unsupported schema");
      log.kind = j.at("kind");
      log.iteration = j.at("iteration");
      log.rollout = j.at("rollout");
      log.sim_seed = j.at("sim_seed");
      header = true;
    } else if (type == "step") {
      StepRecord r;
      r.index = j.at("index");
      r.observed = state_from(j.at("observed"));
      r.compensated = state_from(j.at("compensated"));
      r.control = vec_from(j.at("control"));
      r.next = state_from(j.at("next"));
      r.cost = j.at("cost").is_null() ? std::nan("") : j.at("cost").get<double>();
      r.distance = j.at("distance");
      r.optimizer_time_s = j.at("optimizer_time_s");
      r.iterations = j.at("iterations");
      r.propagation_clamps = j.at("propagation_clamps");
      r.actuator_clamps = j.at("actuator_clamps");
      r.warning = j.at("warning");
      if (j.contains("ticks")) r.ticks = vecs_from(j.at("ticks"));
      if (j.contains("predicted_mean")) {
        r.predicted_mean = vecs_from(j.at("predicted_mean"));
        r.predicted_variance = vecs_from(j.at("predicted_variance"));
      }
      log.steps.push_back(std::move(r));
    } else if (type == "summary") {
      log.aborted = j.at("aborted");
      log.error = j.at("error");
      log.mean_last_distance = j.at("mean_last_distance");
      log.total_samples = j.at("total_samples");
    }
  }
  if (!header) throw std::runtime_error("log: missing header in " + path);
  return log;
}

double mean_last_distance(const RolloutLog& log, int last) {
  if (log.steps.empty()) return std::nan("");
  const std::size_t n = std::min(log.steps.size(), static_cast<std::size_t>(std::max(last, 1)));
  double sum = 0.0;
  for (std::size_t i = log.steps.size() - n; i < log.steps.size(); ++i) sum += log.steps[i].distance;
  return sum / static_cast<double>(n);
}

int replay(const RolloutLog& log, const sim::SimConfig& cfg) {
  sim::OceanSim sim(cfg);
  sim.reset(log.sim_seed);
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const auto& r = log.steps[i];
    if (!(sim.observe() == r.observed)) return static_cast<int>(i);
    if (r.ticks.empty()) {
      sim.hold();
      sim.operate(r.control);
    } else {
      const double dt = cfg.step_duration() / static_cast<double>(r.ticks.size());
      for (const auto& u : r.ticks) sim.advance(u, dt);
      sim.end_step();
    }
    if (!(sim.observe() == r.next)) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace spmpc::harness
