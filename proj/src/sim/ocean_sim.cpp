#include "spmpc/ocean_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace spmpc::sim {

void SimConfig::validate() const {
  if (!(operation_time > 0.0) || !(t_opt >= 0.0)) throw std::invalid_argument("sim: step timing must be positive");
  if (!(dynamics.substep > 0.0)) throw std::invalid_argument("sim: substep must be positive");
  if (!(disturbance.wind_speed_max >= 0.0) || !(disturbance.current_speed_max >= 0.0)) {
    throw std::invalid_argument("sim: disturbance ranges must be non-negative");
  }
}

Vec encode_state(const BoatState& s) {
  Vec x(6);
  const double rwd = s.rel_wind_dir * kDegToRad;
  x << s.x, s.y, s.speed, s.heading, s.rel_wind_speed * std::sin(rwd), s.rel_wind_speed * std::cos(rwd);
  return x;
}

Vec encode_control(double steering, double throttle) {
  Vec u(2);
  u << steering, throttle;
  return u;
}

bool clamp_control(Vec& u) {
  if (u.size() != 2) throw std::invalid_argument("sim: control must be [steering, throttle]");
  if (!u.allFinite()) throw std::invalid_argument("sim: non-finite control");
  const Vec before = u;
  u(0) = std::clamp(u(0), -kSteeringLimit, kSteeringLimit);
  u(1) = std::clamp(u(1), -kThrottleLimit, kThrottleLimit);
  return u != before;
}

EnvState draw_environment(const DisturbanceConfig& cfg, Rng& rng) {
  EnvState e;
  e.wind_dir = wrap_degrees(rng.uniform(-180.0, 180.0));
  e.wind_speed = rng.uniform(0.0, cfg.wind_speed_max);
  e.current_dir = wrap_degrees(rng.uniform(-180.0, 180.0));
  e.current_speed = rng.uniform(0.0, cfg.current_speed_max);
  return e;
}

EnvState drift_disturbances(const EnvState& env, const DisturbanceConfig& cfg, Rng& rng) {
  // Draw order is part of the reproducibility contract.
  EnvState e = env;
  e.wind_dir = wrap_degrees(e.wind_dir + rng.uniform(-cfg.direction_drift, cfg.direction_drift));
  e.current_dir = wrap_degrees(e.current_dir + rng.uniform(-cfg.direction_drift, cfg.direction_drift));
  e.wind_speed = std::clamp(e.wind_speed + rng.uniform(-cfg.speed_drift, cfg.speed_drift), 0.0, cfg.wind_speed_max);
  e.current_speed =
      std::clamp(e.current_speed + rng.uniform(-cfg.speed_drift, cfg.speed_drift), 0.0, cfg.current_speed_max);
  return e;
}

std::pair<double, double> relative_wind(const EnvState& env, double speed, double heading) {
  const double wd = env.wind_dir * kDegToRad;
  const double hd = heading * kDegToRad;
  const double ax = env.wind_speed * std::sin(wd) - speed * std::sin(hd);
  const double ay = env.wind_speed * std::cos(wd) - speed * std::cos(hd);
  const double rws = std::hypot(ax, ay);
  if (rws == 0.0) return {0.0, 0.0};
  return {rws, wrap_degrees(std::atan2(ax, ay) * kRadToDeg - heading)};
}

OceanSim::OceanSim(SimConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::pair<BoatState, EnvState> OceanSim::reset(std::uint64_t seed) {
  env_rng_ = Rng(derive_seed(seed, 1, 0));
  noise_rng_ = Rng(derive_seed(seed, 2, 0));
  env_ = draw_environment(cfg_.disturbance, env_rng_);
  x_ = cfg_.initial_x;
  y_ = cfg_.initial_y;
  v_ = 0.0;
  heading_ = wrap_degrees(cfg_.initial_heading);
  time_ = 0.0;
  prev_u_ = Vec::Zero(2);
  clamp_count_ = 0;
  refresh_observation();
  return {observed_, env_};
}

void OceanSim::advance(const Vec& u_in, double duration) {
  if (!(duration >= 0.0)) throw std::invalid_argument("sim: negative duration");
  Vec u = u_in;
  if (clamp_control(u)) ++clamp_count_;
  const auto& dyn = cfg_.dynamics;
  const int n = static_cast<int>(std::ceil(duration / dyn.substep - 1e-9));
  if (n == 0) return;
  const double dt = duration / n;

  double thr = u(1) / kThrottleLimit;
  if (thr < 0.0) thr *= dyn.reverse_gain;
  const double cd = env_.current_dir * kDegToRad;
  const double wd = env_.wind_dir * kDegToRad;
  const double drift_x = env_.current_speed * std::sin(cd) + dyn.wind_leverage * env_.wind_speed * std::sin(wd);
  const double drift_y = env_.current_speed * std::cos(cd) + dyn.wind_leverage * env_.wind_speed * std::cos(wd);

  for (int k = 0; k < n; ++k) {
    const double hd = heading_ * kDegToRad;
    const double dv = dyn.thrust_accel * thr - dyn.drag * v_;
    const double dpsi = dyn.turn_gain * u(0) * v_;
    x_ += dt * (v_ * std::sin(hd) + drift_x);
    y_ += dt * (v_ * std::cos(hd) + drift_y);
    heading_ = wrap_degrees(heading_ + dt * dpsi);
    v_ += dt * dv;
    if (!dyn.reverse_propulsion) v_ = std::max(0.0, v_);
  }
  time_ += duration;
  refresh_observation();
}

void OceanSim::hold() { advance(prev_u_, cfg_.t_opt); }

void OceanSim::operate(const Vec& u) {
  advance(u, cfg_.operation_time);
  prev_u_ = u;
  clamp_control(prev_u_);
  end_step();
}

const BoatState& OceanSim::step(const Vec& u) {
  hold();
  operate(u);
  return observed_;
}

void OceanSim::end_step() {
  env_ = drift_disturbances(env_, cfg_.disturbance, env_rng_);
  refresh_observation();
}

void OceanSim::set_environment(const EnvState& env) {
  const auto& d = cfg_.disturbance;
  env_.wind_dir = wrap_degrees(env.wind_dir);
  env_.current_dir = wrap_degrees(env.current_dir);
  env_.wind_speed = std::clamp(env.wind_speed, 0.0, d.wind_speed_max);
  env_.current_speed = std::clamp(env.current_speed, 0.0, d.current_speed_max);
  refresh_observation();
}

BoatState OceanSim::true_state() const {
  BoatState s;
  s.x = x_;
  s.y = y_;
  s.speed = std::abs(v_);
  s.heading = heading_;
  std::tie(s.rel_wind_speed, s.rel_wind_dir) = relative_wind(env_, v_, heading_);
  return s;
}

void OceanSim::refresh_observation() {
  observed_ = true_state();
  const auto& nz = cfg_.noise;
  // Draws happen only for enabled channels so noise-free runs leave the stream untouched.
  auto jitter = [&](double sd) { return sd > 0.0 ? sd * noise_rng_.normal() : 0.0; };
  observed_.x += jitter(nz.position);
  observed_.y += jitter(nz.position);
  observed_.speed = std::max(0.0, observed_.speed + jitter(nz.speed));
  observed_.heading = wrap_degrees(observed_.heading + jitter(nz.heading));
  observed_.rel_wind_speed = std::max(0.0, observed_.rel_wind_speed + jitter(nz.wind_speed));
  observed_.rel_wind_dir = wrap_degrees(observed_.rel_wind_dir + jitter(nz.wind_dir));
}

}  // namespace spmpc::sim
