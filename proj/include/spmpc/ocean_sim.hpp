/**
 * @file ocean_sim.hpp
 * @brief Kinematic boat simulator with drifting wind and current.
 *
 * Conventions: X east, Y north, metres. Headings and flow directions are
 * degrees clockwise from +Y, wrapped into (-180, 180]. Wind and current
 * directions give the direction the flow travels toward.
 *
 * Dynamics, integrated with explicit Euler sub-steps:
 *
 *   throttle_n = throttle / 8000, scaled by reverse_gain when negative
 *   dv/dt      = thrust_accel * throttle_n - drag * v
 *   dpsi/dt    = turn_gain * steering * v                       [deg/s]
 *   dX/dt      = v sin(psi) + cs sin(cd) + wind_leverage * ws sin(wd)
 *   dY/dt      = v cos(psi) + cs cos(cd) + wind_leverage * ws cos(wd)
 *
 * With the defaults full throttle settles at 8 m/s and full rudder at that
 * speed turns 15 deg/s. Reverse throttle backs the hull up at reduced gain
 * (4 m/s terminal); v is signed internally and the observation reports |v|.
 * The reverse response is a modeling guess, not validated against a real hull.
 *
 * One control step lasts t_opt + operation_time: the previous control is held
 * for t_opt (the controller is thinking), then the new control runs for the
 * operation time, then wind and current drift once.
 */
#pragma once

#include "spmpc/common.hpp"

#include <cstdint>
#include <utility>

namespace spmpc::sim {

inline constexpr double kSteeringLimit = 30.0;   // deg
inline constexpr double kThrottleLimit = 8000.0; // engine units

/// Observed state (position, speed, heading, relative wind).
struct BoatState {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;          // m/s, >= 0
  double heading = 0.0;        // deg
  double rel_wind_speed = 0.0; // m/s
  double rel_wind_dir = 0.0;   // deg, relative to the bow

  bool operator==(const BoatState&) const = default;
};

/// Hidden disturbance state.
struct EnvState {
  double wind_dir = 0.0;       // deg
  double wind_speed = 0.0;     // m/s
  double current_dir = 0.0;    // deg
  double current_speed = 0.0;  // m/s

  bool operator==(const EnvState&) const = default;
};

struct DisturbanceConfig {
  double wind_speed_max = 10.0;
  double current_speed_max = 1.0;
  double direction_drift = 0.1;  // half-width of the per-step uniform increment, deg
  double speed_drift = 0.1;      // half-width of the per-step uniform increment, m/s
};

struct DynamicsConfig {
  double thrust_accel = 2.0;    // m/s^2 at full throttle
  double drag = 0.25;           // 1/s
  double reverse_gain = 0.5;
  /// When false, reverse throttle only brakes and v never drops below zero.
  bool reverse_propulsion = true;
  double turn_gain = 0.0625;    // deg/s per (deg rudder * m/s)
  double wind_leverage = 0.03;  // drift speed per unit wind speed
  double substep = 0.1;         // s
};

/// Optional Gaussian sensor noise (standard deviations). Off by default.
struct ObservationNoise {
  double position = 0.0;
  double speed = 0.0;
  double heading = 0.0;
  double wind_speed = 0.0;
  double wind_dir = 0.0;
};

struct SimConfig {
  double arena_size = 500.0;
  double initial_x = 0.0;
  double initial_y = 0.0;
  double initial_heading = 0.0;
  double operation_time = 2.5;
  double t_opt = 1.0;
  DisturbanceConfig disturbance;
  DynamicsConfig dynamics;
  ObservationNoise noise;

  double step_duration() const { return operation_time + t_opt; }
  void validate() const;
};

/// GP state input [X, Y, ss, sd, rws sin(rwd), rws cos(rwd)].
Vec encode_state(const BoatState& s);
/// Control vector [steering, throttle].
Vec encode_control(double steering, double throttle);
/// Clamps to the actuator ranges; returns true when clamping was needed.
bool clamp_control(Vec& u);

/// Fresh disturbances: directions ~ U(-180, 180), speeds ~ U(0, max).
EnvState draw_environment(const DisturbanceConfig& cfg, Rng& rng);
/// Adds independent uniform increments, clamps speeds and wraps directions.
EnvState drift_disturbances(const EnvState& env, const DisturbanceConfig& cfg, Rng& rng);

/// Relative wind seen by a boat with speed `speed` along `heading`.
std::pair<double, double> relative_wind(const EnvState& env, double speed, double heading);

class OceanSim {
public:
  explicit OceanSim(SimConfig cfg = {});

  /// Boat at the initial pose at rest, disturbances drawn from `seed`.
  std::pair<BoatState, EnvState> reset(std::uint64_t seed);

  /// Previous control held for t_opt.
  void hold();
  /// `u` for the operation time, then one disturbance drift.
  void operate(const Vec& u);
  /// hold() followed by operate(u).
  const BoatState& step(const Vec& u);

  /// Integrates `u` for `duration` seconds without drifting disturbances.
  void advance(const Vec& u, double duration);
  /// Drifts the disturbances once (end of a control step).
  void end_step();
  /// Replaces the disturbance state (scripted scenarios). Speeds are clamped
  /// to the configured maxima and directions wrapped.
  void set_environment(const EnvState& env);

  const BoatState& observe() const { return observed_; }
  BoatState true_state() const;
  const EnvState& env() const { return env_; }
  const SimConfig& config() const { return cfg_; }
  const Vec& previous_control() const { return prev_u_; }
  long clamp_count() const { return clamp_count_; }
  double time() const { return time_; }

private:
  void refresh_observation();

  SimConfig cfg_;
  EnvState env_;
  Rng env_rng_{0};
  Rng noise_rng_{0};
  double x_ = 0.0, y_ = 0.0, v_ = 0.0, heading_ = 0.0;
  double time_ = 0.0;
  Vec prev_u_ = Vec::Zero(2);
  BoatState observed_;
  long clamp_count_ = 0;
};

}  // namespace spmpc::sim
