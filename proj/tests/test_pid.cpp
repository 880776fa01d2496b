#include "spmpc/baselines.hpp"

#include <doctest.h>

#include <cmath>

using namespace spmpc;
using namespace spmpc::baselines;

namespace {

PIDGains p_only() {
  PIDGains g;
  g.steering.i = g.steering.d = 0.0;
  g.throttle.i = g.throttle.d = 0.0;
  return g;
}

sim::BoatState at(double x, double y, double heading) { return {x, y, 0.0, heading, 0.0, 0.0}; }

}  // namespace

TEST_SUITE("pid") {

TEST_CASE("bearing error") {
  const mpc::TargetSpec t{0.0, 100.0};
  CHECK(bearing_error(at(0, 0, 0), t) == doctest::Approx(0.0));
  CHECK(bearing_error(at(0, 0, -10), t) == doctest::Approx(10.0));
  CHECK(bearing_error(at(0, 0, 10), t) == doctest::Approx(-10.0));
  CHECK(bearing_error(at(0, 0, -170), {0.0, -100.0}) == doctest::Approx(-10.0));
  CHECK(bearing_error(at(0, 0, 0), {100.0, 0.0}) == doctest::Approx(90.0));
}

TEST_CASE("zero error on both loops gives zero command") {
  PidMemory mem;
  const Vec u = pid_control(at(0, 100, 0), {0.0, 100.0}, PIDGains{}, mem);
  CHECK(u(0) == doctest::Approx(0.0));
  CHECK(u(1) == doctest::Approx(0.0));
}

TEST_CASE("proportional response and saturation") {
  PidMemory mem;
  Vec u = pid_control(at(0, 0, -10), {0.0, 100.0}, p_only(), mem);
  CHECK(u(0) == doctest::Approx(10.0));
  CHECK(u(1) == doctest::Approx(100.0));
  PidMemory far;
  u = pid_control(at(0, 0, 0), {0.0, 1.0e5}, p_only(), far);
  CHECK(u(1) == doctest::Approx(sim::kThrottleLimit));
  PidMemory wide;
  u = pid_control(at(0, 0, 0), {-1.0, -100.0}, p_only(), wide);
  CHECK(std::abs(u(0)) == doctest::Approx(sim::kSteeringLimit));
}

TEST_CASE("wrapped error takes the short way round") {
  // Raw difference 350 degrees, wrapped -10.
  PidMemory mem;
  const Vec u = pid_control(at(0, 0, -175), {std::sin(175.0 * kDegToRad), std::cos(175.0 * kDegToRad)}, p_only(), mem);
  CHECK(u(0) == doctest::Approx(-10.0));
}

TEST_CASE("anti-windup bounds the integral under sustained saturation") {
  PIDGains g;
  PidMemory mem;
  const mpc::TargetSpec far{0.0, 1.0e5};
  for (int i = 0; i < 100000; ++i) {
    const Vec u = pid_control(at(0, 0, 0), far, g, mem);
    REQUIRE(u(1) <= sim::kThrottleLimit);
  }
  CHECK(std::abs(g.throttle.i * mem.throttle.integral) <= g.throttle.integral_limit + 1e-9);
  // Saturated the whole time, so the integral never accumulated.
  CHECK(mem.throttle.integral == doctest::Approx(0.0));
}

TEST_CASE("integral accumulates on a small persistent error") {
  PIDGains g;
  PidMemory mem;
  Vec first = pid_control(at(0, 0, -2), {0.0, 100.0}, g, mem);
  Vec later = first;
  for (int i = 0; i < 40; ++i) later = pid_control(at(0, 0, -2), {0.0, 100.0}, g, mem);
  CHECK(later(0) > first(0));
  CHECK(mem.steering.integral > 0.0);
}

TEST_CASE("gain validation") {
  PIDGains g;
  g.rate_hz = 0.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = PIDGains{};
  g.derivative_filter = 0.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

}  // TEST_SUITE
