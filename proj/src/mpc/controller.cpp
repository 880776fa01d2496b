#include "spmpc/mpc.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spmpc::mpc {

ControlSequence::ControlSequence(const Mat& controls) : controls_(controls) {
  if (controls_.cols() != 2 || controls_.rows() < 1) throw std::invalid_argument("control sequence must be H x 2");
}

ControlSequence ControlSequence::constant(int horizon, const Vec& u) {
  if (horizon < 1 || u.size() != 2) throw std::invalid_argument("control sequence: bad shape");
  Mat m(horizon, 2);
  m.rowwise() = u.transpose();
  return ControlSequence(m);
}

ControlSequence ControlSequence::from_normalized(const Vec& v) {
  if (v.size() < 2 || v.size() % 2 != 0) throw std::invalid_argument("control sequence: odd normalized length");
  const Eigen::Index h = v.size() / 2;
  Mat m(h, 2);
  for (Eigen::Index s = 0; s < h; ++s) {
    m(s, 0) = std::clamp(v(2 * s), -1.0, 1.0) * sim::kSteeringLimit;
    m(s, 1) = std::clamp(v(2 * s + 1), -1.0, 1.0) * sim::kThrottleLimit;
  }
  return ControlSequence(m);
}

std::vector<Vec> ControlSequence::steps() const {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(horizon()));
  for (int s = 0; s < horizon(); ++s) out.push_back(at(s));
  return out;
}

Vec ControlSequence::normalized() const {
  Vec v(2 * controls_.rows());
  for (Eigen::Index s = 0; s < controls_.rows(); ++s) {
    v(2 * s) = controls_(s, 0) / sim::kSteeringLimit;
    v(2 * s + 1) = controls_(s, 1) / sim::kThrottleLimit;
  }
  return v;
}

bool ControlSequence::within_bounds() const {
  return controls_.allFinite() && (controls_.col(0).array().abs() <= sim::kSteeringLimit).all() &&
         (controls_.col(1).array().abs() <= sim::kThrottleLimit).all();
}

ControlSequence ControlSequence::shifted() const {
  Mat m(controls_.rows(), 2);
  const Eigen::Index h = controls_.rows();
  m.topRows(h - 1) = controls_.bottomRows(h - 1);
  m.row(h - 1) = controls_.row(h - 1);
  return ControlSequence(m);
}

ControlSequence default_warm_start(const MPCConfig& cfg) {
  return ControlSequence::constant(cfg.horizon, sim::encode_control(cfg.initial_steering, cfg.initial_throttle));
}

ControlSequence next_warm_start(const ControlSequence& solution, const MPCConfig& cfg) {
  if (!cfg.shift_warm_start || solution.horizon() != cfg.horizon) return default_warm_start(cfg);
  return solution.shifted();
}

namespace {

using Clock = std::chrono::steady_clock;

struct DeadlineReached {};

// Tracks the best evaluated point so an interrupted search still returns it.
struct Search {
  const gp::GPModel& model;
  const BeliefState& b0;
  const MPCConfig& cfg;
  const TargetSpec& target;
  Clock::time_point deadline;
  Vec best_x;
  double best = std::numeric_limits<double>::infinity();
  int evaluations = 0;

  double cost(const Vec& v, bool enforce_deadline) {
    if (enforce_deadline && Clock::now() >= deadline) throw DeadlineReached{};
    const double c = long_term_cost(model, b0, ControlSequence::from_normalized(v), cfg, target);
    ++evaluations;
    if (c < best) {
      best = c;
      best_x = v;
    }
    return c;
  }
};

std::vector<Vec> grid_seeds(int horizon) {
  static constexpr double kSteer[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  static constexpr double kThrottle[] = {-1.0, 0.0, 0.5, 1.0};
  std::vector<Vec> seeds;
  for (double s : kSteer) {
    for (double t : kThrottle) {
      Vec v(2 * horizon);
      for (int i = 0; i < horizon; ++i) {
        v(2 * i) = s;
        v(2 * i + 1) = t;
      }
      seeds.push_back(std::move(v));
    }
  }
  return seeds;
}

}  // namespace

OptimizeResult optimize_controls(const gp::GPModel& model, const BeliefState& b0, const MPCConfig& cfg,
                                 const TargetSpec& target, const std::optional<ControlSequence>& warm_start) {
  cfg.validate();
  target.validate();
  const ControlSequence warm = warm_start ? *warm_start : default_warm_start(cfg);
  if (warm.horizon() != cfg.horizon) throw std::invalid_argument("optimize_controls: warm start horizon mismatch");
  if (!warm.within_bounds()) throw std::invalid_argument("optimize_controls: warm start out of bounds");

  const auto start = Clock::now();
  const auto budget = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.time_limit_s));
  Search search{model, b0, cfg, target, start + budget, {}, std::numeric_limits<double>::infinity(), 0};

  OptimizeResult res;
  const Vec x_warm = warm.normalized();
  // The warm start is always evaluated so the never-worsen reference exists.
  res.warm_start_cost = search.cost(x_warm, false);
  const Eigen::Index n = x_warm.size();
  const Vec lo = Vec::Constant(n, -1.0);
  const Vec hi = Vec::Constant(n, 1.0);

  try {
    if (cfg.grid_seeding) {
      for (const Vec& seed : grid_seeds(cfg.horizon)) search.cost(seed, true);
    }
    const Vec x0 = search.best_x;
    optim::Objective objective = [&](const Vec& v, Vec* g) {
      const double f = search.cost(v, true);
      if (g) {
        *g = optim::finite_difference_gradient([&](const Vec& p) { return search.cost(p, true); }, v,
                                               cfg.gradient_step, lo, hi);
      }
      return f;
    };
    optim::BoxOptions bo;
    bo.max_iterations = cfg.max_iterations;
    bo.gradient_tolerance = 1e-6;
    bo.relative_tolerance = 1e-9;
    bo.max_line_search = 20;
    bo.max_step = 0.5;
    bo.time_limit_s = cfg.time_limit_s;
    const auto r = optim::minimize_box(objective, x0, lo, hi, bo);
    res.iterations = r.iterations;
    if (r.reason == optim::StopReason::iteration_limit || r.reason == optim::StopReason::time_limit) {
      res.warning = true;
      res.note = optim::to_string(r.reason);
    }
  } catch (const DeadlineReached&) {
    res.warning = true;
    res.note = "time_limit";
  } catch (const NumericalFailure& e) {
    res.warning = true;
    res.note = std::string("numerical failure: ") + e.what();
  }

  res.sequence = ControlSequence::from_normalized(search.best_x);
  res.cost = search.best;
  res.evaluations = search.evaluations;
  res.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  return res;
}

sim::BoatState bias_compensate(const sim::BoatState& s, double t_opt) {
  if (!(t_opt >= 0.0)) throw std::invalid_argument("bias_compensate: t_opt must be >= 0");
  sim::BoatState out = s;
  const double hd = s.heading * kDegToRad;
  out.x += s.speed * std::sin(hd) * t_opt;
  out.y += s.speed * std::cos(hd) * t_opt;
  return out;
}

StepResult mpc_step(const gp::GPModel& model, const sim::BoatState& s, const MPCConfig& cfg, const TargetSpec& target,
                    const std::optional<ControlSequence>& prev_seq) {
  StepResult out;
  auto& diag = out.diagnostics;
  diag.compensated = cfg.bias_compensation ? bias_compensate(s, cfg.t_opt) : s;
  const BeliefState b0 = BeliefState::point(sim::encode_state(diag.compensated));

  OptimizeResult opt;
  try {
    opt = optimize_controls(model, b0, cfg, target, prev_seq);
  } catch (const NumericalFailure&) {
    // Even the warm start failed to evaluate; fall back to it unoptimized.
    opt.sequence = prev_seq ? *prev_seq : default_warm_start(cfg);
    opt.cost = std::numeric_limits<double>::quiet_NaN();
    opt.warning = true;
  }
  diag.sequence = opt.sequence;
  diag.cost = opt.cost;
  diag.optimizer_time_s = opt.wall_time_s;
  diag.iterations = opt.iterations;
  diag.warning = opt.warning;

  propagation::PropagationStats stats;
  std::vector<BeliefState> traj;
  try {
    long_term_cost(model, b0, opt.sequence, cfg, target, &stats, &traj);
  } catch (const NumericalFailure&) {
    diag.warning = true;
  }
  for (const auto& b : traj) {
    diag.predicted_mean.push_back(b.mean.head(model.output_dim()));
    diag.predicted_variance.push_back(b.cov.diagonal().head(model.output_dim()));
  }
  diag.clamp_count = stats.clamp_count;
  out.control = opt.sequence.at(0);
  return out;
}

}  // namespace spmpc::mpc
