#include "spmpc/harness.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace spmpc::harness {

namespace {

constexpr int kPredicted = 4;  // X, Y, ss, sd
constexpr int kHeadingDim = mpc::kHeading;

enum Stream : std::uint64_t {
  kInitialSim = 1,
  kInitialControls = 2,
  kTrialSim = 3,
  kFit = 4,
  kEval = 5,
  kPredictionSim = 6,
  kPredictionControls = 7,
  kSparse = 8,
};

double distance_to(const sim::BoatState& s, const mpc::TargetSpec& t) { return std::hypot(s.x - t.x, s.y - t.y); }

Vec predicted_part(const sim::BoatState& s) { return sim::encode_state(s).head(kPredicted); }

mpc::MPCConfig controller_config(const ExperimentConfig& cfg) {
  mpc::MPCConfig m = cfg.mpc;
  m.t_opt = cfg.sim.t_opt;
  return m;
}

void finish_log(RolloutLog& log, const ExperimentConfig& cfg) {
  log.mean_last_distance = mean_last_distance(log, cfg.last_steps);
}

}  // namespace

gp::Dataset empty_dataset() { return gp::Dataset(6, 2, kPredicted); }

void add_samples(gp::Dataset& data, const std::vector<Sample>& samples, gp::TargetMode mode) {
  for (const auto& s : samples) {
    Vec y = s.next;
    if (mode == gp::TargetMode::delta) {
      y -= s.state.head(kPredicted);
      y(kHeadingDim) = wrap_degrees(y(kHeadingDim));
    }
    data.add(s.state, s.control, y);
  }
}

std::vector<Sample> random_rollout(sim::OceanSim& sim, int l_rollout, Rng& rng, RolloutLog* log) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(l_rollout));
  for (int j = 0; j < l_rollout; ++j) {
    StepRecord r;
    r.index = j;
    r.observed = sim.observe();
    r.compensated = r.observed;
    const double steer = rng.uniform(-sim::kSteeringLimit, sim::kSteeringLimit);
    const double thr = rng.uniform(-sim::kThrottleLimit, sim::kThrottleLimit);
    r.control = sim::encode_control(steer, thr);
    sim.hold();
    const Vec x = sim::encode_state(sim.observe());
    sim.operate(r.control);
    r.next = sim.observe();
    out.push_back({x, r.control, predicted_part(r.next)});
    if (log) log->steps.push_back(std::move(r));
  }
  return out;
}

gp::GPModel train_model(const gp::Dataset& data, const ModelConfig& cfg, std::uint64_t seed) {
  gp::FitOptions fo;
  fo.max_points = cfg.max_fit_points;
  fo.seed = seed;
  const gp::GPHyperparams hp = gp::fit_hyperparameters(data, gp::initial_hyperparams(data), cfg.hyper_budget, fo);
  if (cfg.sparse_m > 0 && data.size() > cfg.sparse_m) {
    gp::SparseOptions so;
    so.optimize_inputs = cfg.optimize_pseudo_inputs;
    so.budget = cfg.pseudo_input_budget;
    so.seed = derive_seed(seed, kSparse, 0);
    return gp::sparsify(data, hp, cfg.sparse_m, so, cfg.target_mode);
  }
  return gp::GPModel::build(data, hp, cfg.target_mode);
}

RolloutLog run_spmpc_rollout(const gp::GPModel& model, const ExperimentConfig& cfg, std::uint64_t sim_seed,
                             std::vector<Sample>* samples) {
  RolloutLog log;
  log.kind = "spmpc";
  log.sim_seed = sim_seed;
  sim::OceanSim sim(cfg.sim);
  sim.reset(sim_seed);
  const mpc::MPCConfig mcfg = controller_config(cfg);
  std::optional<mpc::ControlSequence> warm;
  try {
    for (int j = 0; j < cfg.l_rollout; ++j) {
      StepRecord r;
      r.index = j;
      r.observed = sim.observe();
      auto step = mpc::mpc_step(model, r.observed, mcfg, cfg.target, warm);
      const auto& d = step.diagnostics;
      r.compensated = d.compensated;
      r.control = step.control;
      r.predicted_mean = d.predicted_mean;
      r.predicted_variance = d.predicted_variance;
      r.cost = d.cost;
      r.optimizer_time_s = d.optimizer_time_s;
      r.iterations = d.iterations;
      r.propagation_clamps = d.clamp_count;
      r.warning = d.warning;

      const long clamps = sim.clamp_count();
      sim.hold();
      const Vec x = sim::encode_state(sim.observe());
      sim.operate(step.control);
      r.next = sim.observe();
      r.actuator_clamps = sim.clamp_count() - clamps;
      r.distance = distance_to(r.next, cfg.target);
      if (samples) samples->push_back({x, step.control, predicted_part(r.next)});
      warm = mpc::next_warm_start(d.sequence, mcfg);
      log.steps.push_back(std::move(r));
    }
  } catch (const NumericalFailure& e) {
    log.aborted = true;
    log.error = e.what();
  }
  finish_log(log, cfg);
  return log;
}

RolloutLog run_pid_rollout(const ExperimentConfig& cfg, std::uint64_t sim_seed) {
  RolloutLog log;
  log.kind = "pid";
  log.sim_seed = sim_seed;
  sim::OceanSim sim(cfg.sim);
  sim.reset(sim_seed);
  baselines::PidMemory memory;
  const int ticks = std::max(1, static_cast<int>(std::lround(cfg.sim.step_duration() * cfg.pid.rate_hz)));
  const double dt = cfg.sim.step_duration() / ticks;
  for (int j = 0; j < cfg.l_rollout; ++j) {
    StepRecord r;
    r.index = j;
    r.observed = sim.observe();
    r.compensated = r.observed;
    const long clamps = sim.clamp_count();
    for (int k = 0; k < ticks; ++k) {
      const Vec u = baselines::pid_control(sim.observe(), cfg.target, cfg.pid, memory);
      sim.advance(u, dt);
      r.ticks.push_back(u);
    }
    sim.end_step();
    r.control = r.ticks.back();
    r.next = sim.observe();
    r.actuator_clamps = sim.clamp_count() - clamps;
    r.distance = distance_to(r.next, cfg.target);
    log.steps.push_back(std::move(r));
  }
  finish_log(log, cfg);
  return log;
}

PredictionError prediction_error(const gp::GPModel& model, const std::vector<Sample>& samples) {
  const int e = model.output_dim();
  PredictionError pe;
  pe.rmse = Vec::Zero(e);
  double z2 = 0.0;
  for (const auto& s : samples) {
    Vec input(model.input_dim());
    input << s.state, s.control;
    const auto p = model.predict(input);
    Vec mean = p.mean;
    if (model.target_mode() == gp::TargetMode::delta) mean += s.state.head(e);
    Vec err = s.next - mean;
    if (e > kHeadingDim) err(kHeadingDim) = wrap_degrees(err(kHeadingDim));
    pe.rmse += err.cwiseAbs2();
    for (int a = 0; a < e; ++a) {
      z2 += err(a) * err(a) / (p.variance(a) + model.hyperparams().outputs[a].noise_var);
    }
  }
  pe.count = static_cast<long>(samples.size());
  if (pe.count > 0) {
    pe.rmse = (pe.rmse / static_cast<double>(pe.count)).cwiseSqrt();
    pe.mean_z2 = z2 / static_cast<double>(pe.count * e);
  }
  return pe;
}

std::uint64_t eval_seed(std::uint64_t master, int i) {
  return derive_seed(master, kEval, static_cast<std::uint64_t>(i));
}

namespace {

EvalMetrics collect(const std::vector<RolloutLog>& runs) {
  EvalMetrics m;
  std::vector<double> times;
  for (const auto& log : runs) {
    m.distances.push_back(log.mean_last_distance);
    for (const auto& r : log.steps) {
      if (log.kind == "spmpc") times.push_back(r.optimizer_time_s);
      if (r.warning) ++m.warnings;
    }
  }
  m.distance = summarize(m.distances);
  m.optimizer_time = summarize(times);
  return m;
}

}  // namespace

EvalMetrics evaluate(const gp::GPModel& model, const ExperimentConfig& cfg, int n_rollouts,
                     std::vector<RolloutLog>* logs) {
  std::vector<RolloutLog> runs(static_cast<std::size_t>(n_rollouts));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_rollouts; ++i) {
    runs[static_cast<std::size_t>(i)] = run_spmpc_rollout(model, cfg, eval_seed(cfg.seed, i));
    runs[static_cast<std::size_t>(i)].rollout = i;
  }
  EvalMetrics m = collect(runs);

  std::vector<Sample> held_out;
  for (int i = 0; i < cfg.prediction_rollouts; ++i) {
    sim::OceanSim sim(cfg.sim);
    sim.reset(derive_seed(cfg.seed, kPredictionSim, static_cast<std::uint64_t>(i)));
    Rng rng(derive_seed(cfg.seed, kPredictionControls, static_cast<std::uint64_t>(i)));
    const auto s = random_rollout(sim, cfg.l_rollout, rng);
    held_out.insert(held_out.end(), s.begin(), s.end());
  }
  m.prediction = prediction_error(model, held_out);
  if (logs) *logs = std::move(runs);
  return m;
}

EvalMetrics evaluate_pid(const ExperimentConfig& cfg, int n_rollouts, std::vector<RolloutLog>* logs) {
  std::vector<RolloutLog> runs(static_cast<std::size_t>(n_rollouts));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_rollouts; ++i) {
    runs[static_cast<std::size_t>(i)] = run_pid_rollout(cfg, eval_seed(cfg.seed, i));
    runs[static_cast<std::size_t>(i)].rollout = i;
  }
  EvalMetrics m = collect(runs);
  if (logs) *logs = std::move(runs);
  return m;
}

TrainResult run_spmpc(const ExperimentConfig& cfg) {
  cfg.validate();
  TrainResult res;
  res.data = empty_dataset();
  const auto mode = cfg.model.target_mode;

  for (int i = 0; i < cfg.n_initial; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    RolloutLog log;
    log.kind = "random";
    log.rollout = i;
    log.sim_seed = derive_seed(cfg.seed, kInitialSim, idx);
    sim::OceanSim sim(cfg.sim);
    sim.reset(log.sim_seed);
    Rng rng(derive_seed(cfg.seed, kInitialControls, idx));
    add_samples(res.data, random_rollout(sim, cfg.l_rollout, rng, &log), mode);
    for (auto& r : log.steps) r.distance = distance_to(r.next, cfg.target);
    finish_log(log, cfg);
    log.total_samples = static_cast<long>(res.data.size());
    res.logs.push_back(std::move(log));
  }
  res.model = train_model(res.data, cfg.model, derive_seed(cfg.seed, kFit, 0));
  if (cfg.evaluate_each_iteration || cfg.n_trials == 0) {
    res.curve.push_back({0, static_cast<long>(res.data.size()), evaluate(res.model, cfg, cfg.eval_rollouts)});
  }

  for (int t = 1; t <= cfg.n_trials; ++t) {
    const auto idx = static_cast<std::uint64_t>(t);
    std::vector<Sample> samples;
    RolloutLog log = run_spmpc_rollout(res.model, cfg, derive_seed(cfg.seed, kTrialSim, idx), &samples);
    log.iteration = t;
    if (log.aborted) {
      ++res.aborted_rollouts;
    } else {
      add_samples(res.data, samples, mode);
    }
    log.total_samples = static_cast<long>(res.data.size());
    res.logs.push_back(std::move(log));
    res.model = train_model(res.data, cfg.model, derive_seed(cfg.seed, kFit, idx));
    if (cfg.evaluate_each_iteration || t == cfg.n_trials) {
      res.curve.push_back({t, static_cast<long>(res.data.size()), evaluate(res.model, cfg, cfg.eval_rollouts)});
    }
  }
  return res;
}

std::vector<AblationVariant> standard_variants() {
  return {
      {"H1_var_bias", 1, true, true},
      {"H5_novar_bias", 5, false, true},
      {"H5_var_nobias", 5, true, false},
      {"H5_var_bias", 5, true, true},
  };
}

AblationTable run_ablation(const ExperimentConfig& base, const std::vector<AblationVariant>& variants,
                           const std::vector<double>& current_speeds, const AblationOptions& options) {
  if (variants.empty()) throw std::invalid_argument("ablation: no variants");
  AblationTable table;
  for (double cs : current_speeds) {
    ExperimentConfig c = base;
    c.sim.disturbance.current_speed_max = cs;
    c.evaluate_each_iteration = false;
    auto with_variant = [&](const AblationVariant& v) {
      ExperimentConfig cv = c;
      cv.mpc.horizon = v.horizon;
      cv.mpc.use_variance = v.use_variance;
      cv.mpc.bias_compensation = v.bias_compensation;
      return cv;
    };

    std::optional<gp::GPModel> shared;
    if (!options.train_per_variant) shared = run_spmpc(with_variant(variants.back())).model;

    const std::size_t first = table.rows.size();
    for (const auto& v : variants) {
      const ExperimentConfig cv = with_variant(v);
      AblationRow row{v.name, cs, {}};
      if (shared) {
        row.metrics = evaluate(*shared, cv, cv.eval_rollouts);
      } else {
        row.metrics = run_spmpc(cv).curve.back().metrics;
      }
      table.rows.push_back(std::move(row));
    }
    if (options.include_pid) table.rows.push_back({"pid", cs, evaluate_pid(c, c.eval_rollouts)});

    const auto& best = table.rows[first + variants.size() - 1];
    for (std::size_t i = first; i < table.rows.size(); ++i) {
      if (i == first + variants.size() - 1) continue;
      table.comparisons.push_back(
          {best.variant, table.rows[i].variant, cs, welch_t_test_less(best.metrics.distances, table.rows[i].metrics.distances)});
    }
  }
  return table;
}

json to_json(const EvalMetrics& m) {
  auto summary = [](const Summary& s) {
    return json{{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"ci95", {s.ci_low, s.ci_high}}};
  };
  return json{{"distance", summary(m.distance)},
              {"distances", m.distances},
              {"optimizer_time_s", summary(m.optimizer_time)},
              {"prediction_rmse", std::vector<double>(m.prediction.rmse.data(),
                                                      m.prediction.rmse.data() + m.prediction.rmse.size())},
              {"prediction_mean_z2", m.prediction.mean_z2},
              {"prediction_count", m.prediction.count},
              {"warnings", m.warnings}};
}

json to_json(const AblationTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"variant", r.variant}, {"current_speed", r.current_speed}, {"metrics", to_json(r.metrics)}});
  }
  json comps = json::array();
  for (const auto& c : t.comparisons) {
    comps.push_back({{"better", c.better},
                     {"worse", c.worse},
                     {"current_speed", c.current_speed},
                     {"t", c.test.t},
                     {"df", c.test.df},
                     {"p_value", c.test.p_value},
                     {"significant", c.test.p_value < 0.05}});
  }
  return json{{"rows", rows}, {"comparisons", comps}};
}

}  // namespace spmpc::harness
