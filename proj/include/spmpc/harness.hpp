/**
 * @file harness.hpp
 * @brief Experiment orchestration: random exploration, the learn/act loop,
 *        evaluation, ablation studies, logs and replay.
 *
 * Every random draw in an experiment comes from a sub-seed of the master
 * seed (derive_seed with a fixed stream id per purpose), so a (config, seed)
 * pair fixes every sample, control and metric. Evaluation rollouts use the
 * same environment seeds at every iteration and in every ablation cell, so
 * comparisons are paired.
 */
#pragma once

#include "spmpc/baselines.hpp"
#include "spmpc/common.hpp"
#include "spmpc/gp_model.hpp"
#include "spmpc/mpc.hpp"
#include "spmpc/ocean_sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace spmpc::harness {

using json = nlohmann::json;

struct ModelConfig {
  gp::TargetMode target_mode = gp::TargetMode::absolute;
  /// Pseudo-input count; 0 keeps the dense model.
  int sparse_m = 50;
  bool optimize_pseudo_inputs = false;
  int pseudo_input_budget = 30;
  int hyper_budget = 100;
  int max_fit_points = 300;
};

struct ExperimentConfig {
  int n_initial = 10;
  int n_trials = 10;
  int l_rollout = 50;
  int eval_rollouts = 10;
  int prediction_rollouts = 40;
  int last_steps = 20;
  /// Evaluate after every retraining (learning curve) instead of only at the end.
  bool evaluate_each_iteration = true;
  std::uint64_t seed = 0;
  mpc::MPCConfig mpc;
  sim::SimConfig sim;
  mpc::TargetSpec target;
  ModelConfig model;
  baselines::PIDGains pid;

  void validate() const;
};

json to_json(const ExperimentConfig& cfg);
/// Starts from the defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::string& path);
/// Applies "a.b.c=value" to `j`. The value is parsed as JSON when possible,
/// otherwise taken as a string.
void apply_override(json& j, const std::string& assignment);

// --- statistics ------------------------------------------------------------

struct Summary {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;   // 95% t interval
  double ci_high = 0.0;
};

Summary summarize(const std::vector<double>& x);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // one-sided, H1: mean(a) < mean(b)
};

/// Welch two-sample t-test, one-sided.
TTest welch_t_test_less(const std::vector<double>& a, const std::vector<double>& b);

// --- logs ------------------------------------------------------------------

inline constexpr int kLogSchemaVersion = 1;

struct StepRecord {
  int index = 0;
  sim::BoatState observed;     // at the start of the step
  sim::BoatState compensated;  // initial state handed to the optimizer
  Vec control;
  /// Controller ticks within the step for high-rate controllers (empty otherwise).
  std::vector<Vec> ticks;
  sim::BoatState next;         // after the step
  std::vector<Vec> predicted_mean;
  std::vector<Vec> predicted_variance;
  double cost = 0.0;
  double distance = 0.0;       // of `next` to the target
  double optimizer_time_s = 0.0;
  int iterations = 0;
  long propagation_clamps = 0;
  long actuator_clamps = 0;
  bool warning = false;
};

struct RolloutLog {
  std::string kind;  // random | spmpc | pid
  int iteration = 0;
  int rollout = 0;
  std::uint64_t sim_seed = 0;
  std::vector<StepRecord> steps;
  bool aborted = false;
  std::string error;
  double mean_last_distance = 0.0;
  long total_samples = 0;
};

void write_log(const RolloutLog& log, const std::string& path);
RolloutLog read_log(const std::string& path);

/// Mean distance to the target over the last `last` steps.
double mean_last_distance(const RolloutLog& log, int last);

/// Re-executes the logged controls in a fresh simulator and checks every
/// logged state bit for bit. Returns the index of the first mismatching step,
/// or -1 when all match.
int replay(const RolloutLog& log, const sim::SimConfig& cfg);

// --- experiment --------------------------------------------------------------

/// One training tuple: state after the hold phase, control, state after operation.
struct Sample {
  Vec state;
  Vec control;
  Vec next;
};

void add_samples(gp::Dataset& data, const std::vector<Sample>& samples, gp::TargetMode mode);
gp::Dataset empty_dataset();

/// Uniform random controls over the actuator ranges. `sim` must be reset.
std::vector<Sample> random_rollout(sim::OceanSim& sim, int l_rollout, Rng& rng, RolloutLog* log = nullptr);

gp::GPModel train_model(const gp::Dataset& data, const ModelConfig& cfg, std::uint64_t seed);

RolloutLog run_spmpc_rollout(const gp::GPModel& model, const ExperimentConfig& cfg, std::uint64_t sim_seed,
                             std::vector<Sample>* samples = nullptr);
RolloutLog run_pid_rollout(const ExperimentConfig& cfg, std::uint64_t sim_seed);

struct PredictionError {
  Vec rmse;            // per output dimension
  double mean_z2 = 0;  // mean squared standardized error over all dims
  long count = 0;
};

/// One-step errors on the given tuples, standardized by latent + noise variance.
PredictionError prediction_error(const gp::GPModel& model, const std::vector<Sample>& samples);

struct EvalMetrics {
  std::vector<double> distances;  // mean last-steps distance per rollout
  Summary distance;
  Summary optimizer_time;         // per step
  PredictionError prediction;
  long warnings = 0;
};

/// Environment seed of evaluation rollout `i`.
std::uint64_t eval_seed(std::uint64_t master, int i);

EvalMetrics evaluate(const gp::GPModel& model, const ExperimentConfig& cfg, int n_rollouts,
                     std::vector<RolloutLog>* logs = nullptr);
EvalMetrics evaluate_pid(const ExperimentConfig& cfg, int n_rollouts, std::vector<RolloutLog>* logs = nullptr);

struct IterationMetrics {
  int iteration = 0;
  long samples = 0;
  EvalMetrics metrics;
};

struct TrainResult {
  gp::GPModel model;
  gp::Dataset data;
  std::vector<RolloutLog> logs;
  std::vector<IterationMetrics> curve;
  int aborted_rollouts = 0;
};

TrainResult run_spmpc(const ExperimentConfig& cfg);

struct AblationVariant {
  std::string name;
  int horizon = 5;
  bool use_variance = true;
  bool bias_compensation = true;
};

/// The four controller configurations compared in the ablation study.
std::vector<AblationVariant> standard_variants();

struct AblationRow {
  std::string variant;
  double current_speed = 0.0;
  EvalMetrics metrics;
};

struct AblationComparison {
  std::string better;
  std::string worse;
  double current_speed = 0.0;
  TTest test;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<AblationComparison> comparisons;
};

struct AblationOptions {
  /// Train a model per variant; otherwise one model trained with the last
  /// variant is shared by all cells at a given current speed.
  bool train_per_variant = true;
  bool include_pid = true;
};

/// Rows are ordered by current speed, then variant (PID last when included).
/// Comparisons test the last variant against every other row at its speed.
AblationTable run_ablation(const ExperimentConfig& base, const std::vector<AblationVariant>& variants,
                           const std::vector<double>& current_speeds, const AblationOptions& options = {});

json to_json(const EvalMetrics& m);
json to_json(const AblationTable& t);

}  // namespace spmpc::harness
