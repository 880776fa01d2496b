#include "spmpc/harness.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spmpc {

namespace gp {
NLOHMANN_JSON_SERIALIZE_ENUM(TargetMode, {{TargetMode::absolute, "absolute"}, {TargetMode::delta, "delta"}})
}  // namespace gp

namespace mpc {
NLOHMANN_JSON_SERIALIZE_ENUM(CostKind, {{CostKind::euclidean, "euclidean"}, {CostKind::mahalanobis, "mahalanobis"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MPCConfig, horizon, discount, cost, sigma_c, bias_compensation,
                                                use_variance, max_iterations, time_limit_s, shift_warm_start,
                                                grid_seeding, control_penalty, gradient_step,
                                                initial_steering, initial_throttle)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TargetSpec, x, y)
}  // namespace mpc

namespace sim {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DisturbanceConfig, wind_speed_max, current_speed_max,
                                                direction_drift, speed_drift)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DynamicsConfig, thrust_accel, drag, reverse_gain,
                                                reverse_propulsion, turn_gain, wind_leverage, substep)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ObservationNoise, position, speed, heading, wind_speed, wind_dir)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimConfig, arena_size, initial_x, initial_y, initial_heading,
                                                operation_time, t_opt, disturbance, dynamics, noise)
}  // namespace sim

namespace baselines {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LoopGains, p, i, d, output_limit, integral_limit)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PIDGains, steering, throttle, derivative_filter, rate_hz)
}  // namespace baselines

namespace harness {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, target_mode, sparse_m, optimize_pseudo_inputs,
                                                pseudo_input_budget, hyper_budget, max_fit_points)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentConfig, n_initial, n_trials, l_rollout, eval_rollouts,
                                                prediction_rollouts, last_steps, evaluate_each_iteration, seed,
                                                mpc, sim, target, model, pid)

namespace {

void reject_unknown(const json& given, const json& known, const std::string& prefix) {
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!known.contains(it.key())) throw std::invalid_argument("config: unknown key '" + key + "'");
    if (it->is_object()) reject_unknown(*it, known.at(it.key()), key);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_initial < 1 || l_rollout < 1 || eval_rollouts < 1) {
    throw std::invalid_argument("config: n_initial, l_rollout and eval_rollouts must be >= 1");
  }
  if (n_trials < 0 || prediction_rollouts < 0) throw std::invalid_argument("config: negative count");
  if (last_steps < 1) throw std::invalid_argument("config: last_steps must be >= 1");
  if (model.sparse_m < 0 || model.hyper_budget < 0) throw std::invalid_argument("config: negative model setting");
  mpc.validate();
  sim.validate();
  target.validate();
  pid.validate();
}

json to_json(const ExperimentConfig& cfg) {
  json j = cfg;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown(j, to_json(ExperimentConfig{}), "");
  ExperimentConfig cfg = j.get<ExperimentConfig>();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return config_from_json(json::parse(in, nullptr, true, true));
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw std::invalid_argument("override path crosses a non-object: " + key);
    node = &(*node)[parts[i]];
  }
  (*node)[parts.back()] = value;
}

}  // namespace harness
}  // namespace spmpc
