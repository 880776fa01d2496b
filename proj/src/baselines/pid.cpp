#include "spmpc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spmpc::baselines {

void PIDGains::validate() const {
  for (const LoopGains* g : {&steering, &throttle}) {
    if (!(g->output_limit > 0.0) || !(g->integral_limit >= 0.0)) throw std::invalid_argument("pid: bad limits");
  }
  if (!(derivative_filter > 0.0 && derivative_filter <= 1.0)) throw std::invalid_argument("pid: filter in (0, 1]");
  if (!(rate_hz > 0.0)) throw std::invalid_argument("pid: rate must be positive");
}

double bearing_error(const sim::BoatState& s, const mpc::TargetSpec& target) {
  const double bearing = std::atan2(target.x - s.x, target.y - s.y) * kRadToDeg;
  return wrap_degrees(bearing - s.heading);
}

namespace {

// Derivative acts on the measurement, not the error, so set-point jumps do not kick.
double loop(double error, double measurement, bool angular, const LoopGains& g, double alpha, double dt,
            LoopMemory& m) {
  double raw = 0.0;
  if (m.primed) {
    double delta = measurement - m.prev_measurement;
    if (angular) delta = wrap_degrees(delta);
    raw = -delta / dt;
  }
  m.derivative = m.primed ? alpha * raw + (1.0 - alpha) * m.derivative : 0.0;
  m.prev_measurement = measurement;
  m.primed = true;

  const double unsat = g.p * error + g.i * m.integral + g.d * m.derivative;
  const double out = std::clamp(unsat, -g.output_limit, g.output_limit);
  // Conditional integration: the integral only moves when it does not push
  // further into saturation. It enters the output from the next tick on.
  if (out == unsat || unsat * error < 0.0) {
    m.integral += error * dt;
    if (g.i > 0.0) {
      const double cap = g.integral_limit / g.i;
      m.integral = std::clamp(m.integral, -cap, cap);
    }
  }
  return out;
}

}  // namespace

Vec pid_control(const sim::BoatState& s, const mpc::TargetSpec& target, const PIDGains& gains, PidMemory& memory) {
  const double dt = 1.0 / gains.rate_hz;
  const double e_bearing = bearing_error(s, target);
  const double distance = std::hypot(target.x - s.x, target.y - s.y);
  // Steering tracks the bearing with the heading as measurement; throttle
  // drives the distance to zero, so its measurement is -distance.
  const double steer = loop(e_bearing, s.heading, true, gains.steering, gains.derivative_filter, dt, memory.steering);
  const double thr = loop(distance, -distance, false, gains.throttle, gains.derivative_filter, dt, memory.throttle);
  return sim::encode_control(steer, thr);
}

}  // namespace spmpc::baselines
