#include "spmpc/harness.hpp"
#include "spmpc/mpc.hpp"

#include <doctest.h>

#include <cmath>

using namespace spmpc;
using namespace spmpc::mpc;

namespace {

// Small boat model learned from random exploration; shared across cases.
const gp::GPModel& boat_model() {
  static const gp::GPModel model = [] {
    auto data = harness::empty_dataset();
    for (int r = 0; r < 3; ++r) {
      sim::OceanSim sim;
      sim.reset(100 + r);
      Rng rng(200 + r);
      harness::add_samples(data, harness::random_rollout(sim, 25, rng), gp::TargetMode::absolute);
    }
    const auto hp = gp::fit_hyperparameters(data, gp::initial_hyperparams(data), 30);
    return gp::sparsify(data, hp, 40);
  }();
  return model;
}

BeliefState start_belief(Rng& rng) {
  sim::BoatState s{rng.uniform(-20, 60), rng.uniform(-20, 60), rng.uniform(0, 6), rng.uniform(-180, 180),
                   rng.uniform(0, 10), rng.uniform(-180, 180)};
  return BeliefState::point(sim::encode_state(s));
}

ControlSequence random_sequence(Rng& rng, int h) {
  Mat m(h, 2);
  for (int s = 0; s < h; ++s) {
    m(s, 0) = rng.uniform(-30, 30);
    m(s, 1) = rng.uniform(-8000, 8000);
  }
  return ControlSequence(m);
}

MPCConfig quick_config(int h) {
  MPCConfig cfg;
  cfg.horizon = h;
  cfg.max_iterations = 8;
  return cfg;
}

}  // namespace

TEST_SUITE("mpc_controller") {

TEST_CASE("euclidean cost examples") {
  const TargetSpec target;
  BeliefState b{Vec::Zero(4), Mat::Zero(4, 4)};
  CHECK(euclidean_cost(b, target) == doctest::Approx(111250.0).epsilon(1e-15));
  b.mean(0) = 400;
  b.mean(1) = 250;
  CHECK(euclidean_cost(b, target) == 0.0);
  b.mean(0) = 10;
  const double c = euclidean_cost(b, target);
  b.cov = 5.0 * Mat::Identity(4, 4);
  CHECK(euclidean_cost(b, target) == c);
}

TEST_CASE("mahalanobis cost examples") {
  const TargetSpec target{3.0, -1.0};
  BeliefState b{Vec::Zero(4), Mat::Zero(4, 4)};
  b.mean(0) = 1.0;
  b.mean(1) = 2.0;
  CHECK(mahalanobis_cost(b, target, 1.0) == doctest::Approx(euclidean_cost(b, target)).epsilon(1e-15));
  const double d2 = 2.0 * 2.0 + 3.0 * 3.0;
  b.cov.topLeftCorner(2, 2) = Mat::Identity(2, 2);
  CHECK(mahalanobis_cost(b, target, 1.0) == doctest::Approx(0.25 * d2).epsilon(1e-14));
}

TEST_CASE("mahalanobis cost decreases as the position covariance grows") {
  const TargetSpec target;
  BeliefState b{Vec::Zero(4), Mat::Zero(4, 4)};
  Mat base(2, 2);
  base << 2.0, 0.5, 0.5, 1.0;
  double prev = mahalanobis_cost(b, target, 1.5);
  for (double s : {0.1, 1.0, 10.0, 100.0}) {
    b.cov.topLeftCorner(2, 2) = s * base;
    const double c = mahalanobis_cost(b, target, 1.5);
    CHECK(c < prev);
    prev = c;
  }
}

TEST_CASE("mahalanobis cost collapses to scaled euclidean on a shrinking ladder") {
  const TargetSpec target{5.0, 7.0};
  BeliefState b{Vec::Zero(4), Mat::Zero(4, 4)};
  b.mean(0) = -3.0;
  const double sigma_c = 2.0;
  const double limit = sigma_c * sigma_c * euclidean_cost(b, target);
  double prev_gap = INFINITY;
  for (int k = 0; k <= 12; k += 2) {
    b.cov.topLeftCorner(2, 2) = std::pow(10.0, -k) * Mat::Identity(2, 2);
    const double gap = std::abs(mahalanobis_cost(b, target, sigma_c) - limit);
    CHECK(gap <= prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-8 * limit);
}

TEST_CASE("control sequence normalization and bounds") {
  Rng rng(73);
  const auto seq = random_sequence(rng, 4);
  CHECK(seq.within_bounds());
  const auto back = ControlSequence::from_normalized(seq.normalized());
  CHECK((back.matrix() - seq.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  Mat bad(1, 2);
  bad << 31.0, 0.0;
  CHECK_FALSE(ControlSequence(bad).within_bounds());
  CHECK_THROWS_AS(ControlSequence(Mat::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("warm start shift drops the first entry and repeats the last") {
  Mat m(3, 2);
  m << 1, 10, 2, 20, 3, 30;
  const auto s = ControlSequence(m).shifted();
  CHECK(s.at(0) == sim::encode_control(2, 20));
  CHECK(s.at(1) == sim::encode_control(3, 30));
  CHECK(s.at(2) == sim::encode_control(3, 30));
  MPCConfig cfg;
  cfg.horizon = 3;
  CHECK(next_warm_start(ControlSequence(m), cfg).matrix() == s.matrix());
  cfg.shift_warm_start = false;
  CHECK(next_warm_start(ControlSequence(m), cfg).matrix() == default_warm_start(cfg).matrix());
  CHECK(default_warm_start(cfg).at(0) == sim::encode_control(0, 4000));
}

TEST_CASE("long-term cost: one step, discount annihilation and a manual unroll") {
  const auto& model = boat_model();
  Rng rng(79);
  const TargetSpec target;
  for (int t = 0; t < 5; ++t) {
    const auto b0 = start_belief(rng);
    const auto seq5 = random_sequence(rng, 5);
    MPCConfig cfg;
    cfg.horizon = 1;
    const auto seq1 = ControlSequence(seq5.matrix().topRows(1));
    const double one = long_term_cost(model, b0, seq1, cfg, target);
    const auto b1 = propagation::propagate(model, b0, seq5.at(0));
    CHECK(one == doctest::Approx(euclidean_cost(b1, target)).epsilon(1e-12));

    cfg.horizon = 5;
    cfg.discount = 0.0;
    CHECK(long_term_cost(model, b0, seq5, cfg, target) == doctest::Approx(one).epsilon(1e-12));

    cfg.horizon = 2;
    cfg.discount = 0.95;
    cfg.cost = CostKind::mahalanobis;
    const auto seq2 = ControlSequence(seq5.matrix().topRows(2));
    Vec m1 = b1.mean;
    m1(kHeading) = wrap_degrees(m1(kHeading));
    const auto x1 = propagation::extend_with_exogenous({m1, b1.cov}, b0.mean.tail(2));
    const auto b2 = propagation::propagate(model, x1, seq5.at(1));
    const double manual = mahalanobis_cost(b1, target, 1.0) + 0.95 * mahalanobis_cost(b2, target, 1.0);
    CHECK(std::abs(long_term_cost(model, b0, seq2, cfg, target) - manual) < 1e-10 * std::max(1.0, manual));
  }
}

TEST_CASE("variance switch is inert for zero-covariance one-step predictions") {
  const auto& model = boat_model();
  Rng rng(83);
  MPCConfig on = quick_config(1);
  MPCConfig off = on;
  off.use_variance = false;
  for (int t = 0; t < 10; ++t) {
    const auto b0 = start_belief(rng);
    const auto seq = random_sequence(rng, 1);
    CHECK(std::abs(long_term_cost(model, b0, seq, on, {}) - long_term_cost(model, b0, seq, off, {})) < 1e-10);
  }
  // With the variance off the cost sees means only, so the Mahalanobis
  // cost reduces to the Euclidean one.
  off.cost = CostKind::mahalanobis;
  off.horizon = 3;
  MPCConfig eu = off;
  eu.cost = CostKind::euclidean;
  const auto b0 = start_belief(rng);
  const auto seq = random_sequence(rng, 3);
  CHECK(long_term_cost(model, b0, seq, off, {}) == doctest::Approx(long_term_cost(model, b0, seq, eu, {})));
}

TEST_CASE("optimizer never worsens the warm start and respects bounds") {
  const auto& model = boat_model();
  Rng rng(89);
  for (int t = 0; t < 100; ++t) {
    const int h = 1 + t % 3;
    MPCConfig cfg = quick_config(h);
    cfg.max_iterations = 2 + t % 4;
    cfg.grid_seeding = t % 2 == 0;
    const auto b0 = start_belief(rng);
    const auto warm = random_sequence(rng, h);
    const auto r = optimize_controls(model, b0, cfg, {}, warm);
    CHECK(r.sequence.within_bounds());
    CHECK(r.cost <= r.warm_start_cost);
    CHECK(r.warm_start_cost == doctest::Approx(long_term_cost(model, b0, warm, cfg, {})).epsilon(1e-14));
    CHECK(r.cost == doctest::Approx(long_term_cost(model, b0, r.sequence, cfg, {})).epsilon(1e-12));
  }
}

TEST_CASE("optimizer result is a fixed point of itself") {
  const auto& model = boat_model();
  Rng rng(97);
  MPCConfig cfg = quick_config(1);
  cfg.max_iterations = 100;
  const auto b0 = start_belief(rng);
  const auto first = optimize_controls(model, b0, cfg, {}, std::nullopt);
  cfg.grid_seeding = false;
  const auto second = optimize_controls(model, b0, cfg, {}, first.sequence);
  CHECK(second.cost <= first.cost);
  CHECK((second.sequence.normalized() - first.sequence.normalized()).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("one-step optimum is close to a grid search") {
  const auto& model = boat_model();
  Rng rng(101);
  MPCConfig cfg;
  cfg.horizon = 1;
  for (int t = 0; t < 3; ++t) {
    const auto b0 = start_belief(rng);
    const auto r = optimize_controls(model, b0, cfg, {}, std::nullopt);
    double best = INFINITY;
    for (int i = 0; i <= 30; ++i) {
      for (int j = 0; j <= 40; ++j) {
        const auto seq = ControlSequence::constant(1, sim::encode_control(-30 + 2.0 * i, -8000 + 400.0 * j));
        best = std::min(best, long_term_cost(model, b0, seq, cfg, {}));
      }
    }
    CHECK(r.cost <= 1.05 * best);
  }
}

TEST_CASE("bias compensation examples") {
  sim::BoatState s{10, 20, 0, 45, 3, 30};
  CHECK(bias_compensate(s, 1.0) == s);
  s.speed = 2;
  s.heading = 0;
  auto c = bias_compensate(s, 1.0);
  CHECK(c.y == doctest::Approx(22.0));
  CHECK(c.x == doctest::Approx(10.0));
  s.heading = 90;
  c = bias_compensate(s, 2.0);
  CHECK(c.x == doctest::Approx(14.0));
  CHECK(std::abs(c.y - 20.0) < 1e-12);
  CHECK(c.speed == s.speed);
  CHECK(c.rel_wind_dir == s.rel_wind_dir);
  CHECK_THROWS_AS(bias_compensate(s, -1.0), std::invalid_argument);
}

TEST_CASE("mpc step returns the first optimized control and is deterministic") {
  const auto& model = boat_model();
  const sim::BoatState s{5, -3, 2.5, 20, 4, -60};
  MPCConfig cfg = quick_config(3);
  const auto a = mpc_step(model, s, cfg, {}, std::nullopt);
  const auto b = mpc_step(model, s, cfg, {}, std::nullopt);
  CHECK(a.control == b.control);
  CHECK(a.diagnostics.sequence.matrix() == b.diagnostics.sequence.matrix());
  CHECK(a.control == a.diagnostics.sequence.at(0));
  CHECK(a.diagnostics.predicted_mean.size() == 3);
  CHECK(a.diagnostics.compensated.y > s.y);

  const auto b0 = BeliefState::point(sim::encode_state(bias_compensate(s, cfg.t_opt)));
  const auto direct = optimize_controls(model, b0, cfg, {}, std::nullopt);
  CHECK(direct.sequence.matrix() == a.diagnostics.sequence.matrix());

  cfg.bias_compensation = false;
  const auto raw = mpc_step(model, s, cfg, {}, std::nullopt);
  CHECK(raw.diagnostics.compensated == s);
}

TEST_CASE("optimizer honours its wall-clock budget") {
  const auto& model = boat_model();
  MPCConfig cfg;
  cfg.horizon = 5;
  cfg.max_iterations = 100000;
  cfg.time_limit_s = 0.2;
  cfg.gradient_step = 1e-4;
  const sim::BoatState s{0, 0, 0, 0, 5, 90};
  const auto r = mpc_step(model, s, cfg, {}, std::nullopt);
  CHECK(r.diagnostics.optimizer_time_s <= 1.1 * cfg.time_limit_s);
  CHECK(r.diagnostics.sequence.within_bounds());
}

TEST_CASE("config validation") {
  MPCConfig cfg;
  cfg.horizon = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.discount = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.sigma_c = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(cost_kind_from_string("manhattan"), std::invalid_argument);
  CHECK_THROWS_AS((TargetSpec{NAN, 0}.validate()), std::invalid_argument);
}

}  // TEST_SUITE
