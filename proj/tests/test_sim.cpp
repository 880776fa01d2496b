#include "spmpc/ocean_sim.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace spmpc;
using namespace spmpc::sim;

namespace {

SimConfig calm_config() {
  SimConfig cfg;
  cfg.disturbance.wind_speed_max = 0.0;
  cfg.disturbance.current_speed_max = 0.0;
  cfg.disturbance.direction_drift = 0.0;
  cfg.disturbance.speed_drift = 0.0;
  return cfg;
}

// Asymptotic Kolmogorov distribution tail with the usual small-sample correction.
double ks_p_value(std::vector<double> x, double lo, double hi) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = (x[i] - lo) / (hi - lo);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k < 100; ++k) p += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

TEST_SUITE("ocean_sim") {

TEST_CASE("reset is deterministic and starts at rest") {
  OceanSim a, b;
  const auto ra = a.reset(12345);
  const auto rb = b.reset(12345);
  CHECK(ra.first == rb.first);
  CHECK(ra.second == rb.second);
  CHECK(ra.first.x == 0.0);
  CHECK(ra.first.y == 0.0);
  CHECK(ra.first.speed == 0.0);
  const auto rc = a.reset(12346);
  CHECK_FALSE(rc.second == ra.second);
}

TEST_CASE("reset draws: bounds and uniform wind direction") {
  OceanSim sim;
  const int n = 10000;
  const int bins = 36;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < n; ++i) {
    const auto env = sim.reset(static_cast<std::uint64_t>(i)).second;
    CHECK(env.current_speed <= sim.config().disturbance.current_speed_max);
    CHECK(env.current_speed >= 0.0);
    CHECK(env.wind_speed <= sim.config().disturbance.wind_speed_max);
    CHECK(env.wind_dir > -180.0);
    CHECK(env.wind_dir <= 180.0);
    const int k = std::min(bins - 1, static_cast<int>((env.wind_dir + 180.0) / 360.0 * bins));
    ++counts[k];
  }
  const double expected = static_cast<double>(n) / bins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(bins - 1);
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
}

TEST_CASE("no forces: a boat at rest stays put") {
  OceanSim sim(calm_config());
  sim.reset(1);
  sim.step(encode_control(20.0, 0.0));
  CHECK(sim.observe().x == 0.0);
  CHECK(sim.observe().y == 0.0);
  CHECK(sim.observe().speed == 0.0);
  CHECK(sim.observe().heading == 0.0);
}

TEST_CASE("constant throttle follows the discrete first-order speed law") {
  const auto cfg = calm_config();
  OceanSim sim(cfg);
  sim.reset(2);
  const auto& dyn = cfg.dynamics;
  const double tau = 0.5;
  const double v_term = dyn.thrust_accel * tau / dyn.drag;
  const double dt = dyn.substep;
  double prev = 0.0;
  double y = 0.0;
  for (int k = 1; k <= 60; ++k) {
    sim.advance(encode_control(0.0, tau * kThrottleLimit), dt);
    const double v_prev = v_term * (1.0 - std::pow(1.0 - dyn.drag * dt, k - 1));
    y += v_prev * dt;
    const double v = v_term * (1.0 - std::pow(1.0 - dyn.drag * dt, k));
    CHECK(sim.observe().speed == doctest::Approx(v).epsilon(1e-12));
    CHECK(sim.observe().speed > prev);
    CHECK(sim.observe().speed < v_term);
    CHECK(sim.observe().y == doctest::Approx(y).epsilon(1e-12));
    CHECK(std::abs(sim.observe().x) < 1e-12);
    prev = sim.observe().speed;
  }
  // Within 1% of the continuous-time solution after 6 s.
  CHECK(prev == doctest::Approx(v_term * (1.0 - std::exp(-dyn.drag * 6.0))).epsilon(0.01));
}

TEST_CASE("full throttle and full rudder reach the documented envelope") {
  OceanSim sim(calm_config());
  sim.reset(3);
  for (int i = 0; i < 20; ++i) sim.advance(encode_control(0.0, kThrottleLimit), 3.5);
  CHECK(sim.observe().speed == doctest::Approx(8.0).epsilon(1e-3));
  const double h0 = sim.observe().heading;
  sim.advance(encode_control(kSteeringLimit, kThrottleLimit), 1.0);
  CHECK(wrap_degrees(sim.observe().heading - h0) == doctest::Approx(15.0).epsilon(1e-3));
}

TEST_CASE("pure current carries a drifting boat") {
  auto cfg = calm_config();
  cfg.disturbance.current_speed_max = 1.0;
  OceanSim sim(cfg);
  sim.reset(4);
  sim.set_environment({0.0, 0.0, 0.0, 1.0});
  sim.step(encode_control(0.0, 0.0));
  CHECK(sim.observe().y == doctest::Approx(cfg.step_duration()).epsilon(1e-12));
  CHECK(std::abs(sim.observe().x) < 1e-12);
}

TEST_CASE("reverse throttle backs up at reduced gain") {
  const auto cfg = calm_config();
  OceanSim sim(cfg);
  sim.reset(5);
  sim.advance(encode_control(0.0, -kThrottleLimit), 60.0);
  const double v_rev = cfg.dynamics.thrust_accel * cfg.dynamics.reverse_gain / cfg.dynamics.drag;
  CHECK(sim.observe().speed == doctest::Approx(v_rev).epsilon(1e-6));
  CHECK(sim.observe().y < -100.0);
  CHECK(std::abs(sim.observe().x) < 1e-9);
  // Backing up with rudder swings the stern the other way.
  sim.advance(encode_control(10.0, -kThrottleLimit), 1.0);
  CHECK(sim.observe().heading < 0.0);
}

TEST_CASE("brake-only reverse never backs up") {
  auto cfg = calm_config();
  cfg.dynamics.reverse_propulsion = false;
  OceanSim sim(cfg);
  sim.reset(5);
  sim.advance(encode_control(0.0, kThrottleLimit), 10.0);
  const double v0 = sim.observe().speed;
  sim.advance(encode_control(0.0, -kThrottleLimit), 1.0);
  CHECK(sim.observe().speed < v0);
  sim.advance(encode_control(0.0, -kThrottleLimit), 60.0);
  CHECK(sim.observe().speed == 0.0);
}

TEST_CASE("speed decays monotonically without throttle or disturbances") {
  OceanSim sim(calm_config());
  sim.reset(6);
  sim.advance(encode_control(10.0, kThrottleLimit), 10.0);
  double prev = sim.observe().speed;
  for (int i = 0; i < 100; ++i) {
    sim.advance(encode_control(-5.0, 0.0), 0.1);
    CHECK(sim.observe().speed <= prev);
    prev = sim.observe().speed;
  }
}

TEST_CASE("relative wind") {
  EnvState env{60.0, 7.0, 0.0, 0.0};
  auto [rws, rwd] = relative_wind(env, 0.0, 20.0);
  CHECK(rws == doctest::Approx(7.0));
  CHECK(rwd == doctest::Approx(40.0));
  // Heading straight into the wind: the wind travels toward 60, the boat toward -120.
  std::tie(rws, rwd) = relative_wind(env, 3.0, -120.0);
  CHECK(rws == doctest::Approx(10.0));
  CHECK(std::abs(std::abs(rwd) - 180.0) < 1e-9);
  CHECK(relative_wind({0, 0, 0, 0}, 0.0, 10.0) == std::make_pair(0.0, 0.0));
}

TEST_CASE("drift: degenerate increments, clamping and uniform increments") {
  DisturbanceConfig zero;
  zero.direction_drift = 0.0;
  zero.speed_drift = 0.0;
  Rng rng(7);
  const EnvState e0{10.0, 5.0, -30.0, 0.5};
  CHECK(drift_disturbances(e0, zero, rng) == e0);

  DisturbanceConfig cfg;
  EnvState e = e0;
  for (int i = 0; i < 100000; ++i) {
    e = drift_disturbances(e, cfg, rng);
    REQUIRE(e.wind_speed >= 0.0);
    REQUIRE(e.wind_speed <= 10.0);
    REQUIRE(e.current_speed <= 1.0);
  }

  std::vector<double> inc;
  const EnvState mid{0.0, 5.0, 0.0, 0.5};
  for (int i = 0; i < 20000; ++i) inc.push_back(drift_disturbances(mid, cfg, rng).wind_dir - mid.wind_dir);
  CHECK(ks_p_value(inc, -0.1, 0.1) > 0.01);
}

TEST_CASE("emitted angles stay wrapped over a million random steps") {
  OceanSim sim;
  sim.reset(8);
  Rng rng(9);
  bool ok = true;
  for (int i = 0; i < 1000000 && ok; ++i) {
    const auto& s = sim.step(encode_control(rng.uniform(-30, 30), rng.uniform(-8000, 8000)));
    ok = s.heading > -180.0 && s.heading <= 180.0 && s.rel_wind_dir > -180.0 && s.rel_wind_dir <= 180.0 &&
         s.speed >= 0.0 && sim.env().wind_dir > -180.0 && sim.env().wind_dir <= 180.0;
  }
  CHECK(ok);
}

TEST_CASE("rollouts are bit-reproducible given seed and control trace") {
  OceanSim a, b;
  a.reset(10);
  b.reset(10);
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec u = encode_control(rng.uniform(-30, 30), rng.uniform(-8000, 8000));
    CHECK(a.step(u) == b.step(u));
  }
  CHECK(a.env() == b.env());
}

TEST_CASE("out-of-range controls are clamped and counted") {
  OceanSim a(calm_config()), b(calm_config());
  a.reset(12);
  b.reset(12);
  a.advance(encode_control(45.0, 9000.0), 3.0);
  b.advance(encode_control(30.0, 8000.0), 3.0);
  CHECK(a.observe() == b.observe());
  CHECK(a.clamp_count() == 1);
  CHECK(b.clamp_count() == 0);
}

TEST_CASE("observation noise hooks") {
  SimConfig cfg;
  cfg.noise.position = 1.0;
  OceanSim sim(cfg);
  sim.reset(13);
  sim.step(encode_control(0.0, 4000.0));
  CHECK(sim.observe().x != sim.true_state().x);
  OceanSim clean;
  clean.reset(13);
  clean.step(encode_control(0.0, 4000.0));
  CHECK(clean.observe() == clean.true_state());
}

TEST_CASE("state encoding") {
  const BoatState s{1, 2, 3, 4, 5, 90};
  const Vec x = encode_state(s);
  REQUIRE(x.size() == 6);
  CHECK(x(4) == doctest::Approx(5.0));
  CHECK(std::abs(x(5)) < 1e-12);
  SimConfig bad;
  bad.operation_time = 0.0;
  CHECK_THROWS_AS(OceanSim{bad}, std::invalid_argument);
}

}  // TEST_SUITE
