/**
 * @file baselines.hpp
 * @brief Two-loop PID autopilot: steering on bearing error, throttle on
 *        distance to the target.
 */
#pragma once

#include "spmpc/common.hpp"
#include "spmpc/mpc.hpp"
#include "spmpc/ocean_sim.hpp"

namespace spmpc::baselines {

struct LoopGains {
  double p = 1.0;
  double i = 0.1;
  double d = 0.1;
  double output_limit = 1.0;
  double integral_limit = 1.0;  // bound on |i * integral|, output units
};

struct PIDGains {
  /// Degrees of rudder per degree of bearing error.
  LoopGains steering{1.0, 0.1, 0.1, sim::kSteeringLimit, sim::kSteeringLimit};
  /// Throttle units per metre of distance.
  LoopGains throttle{1.0, 0.1, 0.1, sim::kThrottleLimit, sim::kThrottleLimit};
  /// Weight of the newest sample in the derivative low-pass, in (0, 1].
  double derivative_filter = 0.5;
  double rate_hz = 20.0;

  void validate() const;
};

struct LoopMemory {
  double integral = 0.0;
  double prev_measurement = 0.0;
  double derivative = 0.0;
  bool primed = false;
};

struct PidMemory {
  LoopMemory steering;
  LoopMemory throttle;
};

/// Bearing from the boat to the target minus heading, wrapped to (-180, 180].
double bearing_error(const sim::BoatState& s, const mpc::TargetSpec& target);

/// One controller tick of length 1 / rate_hz. Updates `memory`.
Vec pid_control(const sim::BoatState& s, const mpc::TargetSpec& target, const PIDGains& gains, PidMemory& memory);

}  // namespace spmpc::baselines
