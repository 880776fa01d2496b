/**
 * @file mpc.hpp
 * @brief Receding-horizon controller over a GP boat model.
 *
 * The model state is [X, Y, ss, sd, wx, wy] where (wx, wy) is the relative
 * wind vector in the boat frame. The first four dimensions are predicted, the
 * wind pair is exogenous and held fixed over the horizon.
 *
 * The optimizer works on controls normalized to [-1, 1] per channel.
 */
#pragma once

#include "spmpc/common.hpp"
#include "spmpc/gp_model.hpp"
#include "spmpc/ocean_sim.hpp"
#include "spmpc/optim.hpp"
#include "spmpc/propagation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spmpc::mpc {

using propagation::BeliefState;

inline constexpr int kPosX = 0;
inline constexpr int kPosY = 1;
inline constexpr int kSpeed = 2;
inline constexpr int kHeading = 3;

/// H controls [steering deg, throttle units], stored as an H x 2 matrix.
class ControlSequence {
public:
  ControlSequence() = default;
  explicit ControlSequence(const Mat& controls);
  /// `horizon` copies of `u`.
  static ControlSequence constant(int horizon, const Vec& u);
  /// From a flattened [s_0, t_0, s_1, t_1, ...] vector in [-1, 1].
  static ControlSequence from_normalized(const Vec& v);

  int horizon() const { return static_cast<int>(controls_.rows()); }
  Vec at(int s) const { return controls_.row(s).transpose(); }
  const Mat& matrix() const { return controls_; }
  std::vector<Vec> steps() const;
  Vec normalized() const;
  bool within_bounds() const;

  /// Drops the first entry and repeats the last.
  ControlSequence shifted() const;

private:
  Mat controls_;
};

enum class CostKind { euclidean, mahalanobis };

std::string to_string(CostKind k);
CostKind cost_kind_from_string(const std::string& s);

struct MPCConfig {
  int horizon = 5;
  double discount = 0.95;
  CostKind cost = CostKind::euclidean;
  double sigma_c = 1.0;
  bool bias_compensation = true;
  bool use_variance = true;
  int max_iterations = 200;
  double time_limit_s = 60.0;
  /// Warm start from the previous solution shifted by one step.
  bool shift_warm_start = true;
  /// Also try constant sequences on a coarse control grid as starting points.
  bool grid_seeding = true;
  double control_penalty = 0.0;  // on normalized controls
  double gradient_step = 1e-4;   // normalized units
  double t_opt = 1.0;            // s, used by bias compensation
  double initial_steering = 0.0;
  double initial_throttle = 4000.0;

  void validate() const;
};

struct TargetSpec {
  double x = 400.0;
  double y = 250.0;

  void validate() const;
};

/// 1/2 |P - target|^2 on the belief mean.
double euclidean_cost(const BeliefState& b, const TargetSpec& target);

/// 1/2 d^T S d, S = W^-1 (I + Sigma_P W^-1)^-1, W = I / sigma_c^2.
double mahalanobis_cost(const BeliefState& b, const TargetSpec& target, double sigma_c);

/// Discounted sum over the H predicted beliefs. `b0` covers the full model
/// state. `trajectory`, when given, receives the predicted beliefs.
double long_term_cost(const gp::GPModel& model, const BeliefState& b0, const ControlSequence& seq,
                      const MPCConfig& cfg, const TargetSpec& target,
                      propagation::PropagationStats* stats = nullptr,
                      std::vector<BeliefState>* trajectory = nullptr);

ControlSequence default_warm_start(const MPCConfig& cfg);

struct OptimizeResult {
  ControlSequence sequence;
  double cost = 0.0;
  double warm_start_cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double wall_time_s = 0.0;
  /// Budget ran out or a numerical failure cut the search short.
  bool warning = false;
  std::string note;
};

/// Local search from the best of the warm start and (optionally) the grid
/// seeds. The result never costs more than the warm start.
OptimizeResult optimize_controls(const gp::GPModel& model, const BeliefState& b0, const MPCConfig& cfg,
                                 const TargetSpec& target, const std::optional<ControlSequence>& warm_start);

/// Dead reckoning over `t_opt` seconds along the current heading.
sim::BoatState bias_compensate(const sim::BoatState& s, double t_opt);

struct StepDiagnostics {
  sim::BoatState compensated;
  ControlSequence sequence;
  std::vector<Vec> predicted_mean;      // H entries over the predicted dims
  std::vector<Vec> predicted_variance;  // H entries, diagonal only
  double cost = 0.0;
  double optimizer_time_s = 0.0;
  int iterations = 0;
  long clamp_count = 0;
  bool warning = false;
};

struct StepResult {
  Vec control;
  StepDiagnostics diagnostics;
};

StepResult mpc_step(const gp::GPModel& model, const sim::BoatState& s, const MPCConfig& cfg, const TargetSpec& target,
                    const std::optional<ControlSequence>& prev_seq);

/// Warm start for the step after `solution` under `cfg`.
ControlSequence next_warm_start(const ControlSequence& solution, const MPCConfig& cfg);

}  // namespace spmpc::mpc
