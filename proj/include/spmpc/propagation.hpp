/**
 * @file propagation.hpp
 * @brief Moment-matched propagation of a Gaussian state belief through a GP
 *        dynamics model under a deterministic control.
 *
 * The kernel over (x, u) factorizes as k_a(u_i, u_j) * k_a(x_i, x_j), with the
 * signal variance carried by the state factor. With x* ~ N(mu, Sigma) and u*
 * fixed, the control factors k_a(u_i, u*) become per-support-point weights and
 * only the state factor is integrated, giving closed-form mean, variance and
 * cross-covariances of the next state.
 *
 * Two implementations are provided:
 *   - propagate(): vectorized kernel (Gram-style products, parallel over
 *     output pairs), used by the controller;
 *   - propagate_reference(): serial element-by-element evaluation of the
 *     l_a, L and Q entries, kept as the test reference.
 */
#pragma once

#include "spmpc/common.hpp"
#include "spmpc/gp_model.hpp"

#include <vector>

namespace spmpc::propagation {

/// Gaussian belief N(mean, cov).
struct BeliefState {
  Vec mean;
  Mat cov;

  Eigen::Index dim() const { return mean.size(); }
  /// Zero-covariance belief at `x`.
  static BeliefState point(const Vec& x);
  /// Throws std::invalid_argument unless cov is square, symmetric and PSD
  /// (min eigenvalue >= -1e-9 relative to its scale).
  void validate() const;
};

/// Intermediate quantities of one propagation step. Filled on request.
struct MomentMatchWorkspace {
  std::vector<Vec> l;              // l_a, one per output dimension
  std::vector<Vec> control_weight; // k_a(U, u*)
  std::vector<Mat> q;              // Q_ab stored for a <= b at index pair_index(a, b)
  Vec input_output_cov;            // flattened D x E, only for delta targets
};

/// Index of the (a, b), a <= b, block in MomentMatchWorkspace::q for E outputs.
int pair_index(int a, int b, int outputs);

struct PropagationStats {
  long clamp_count = 0;  // variance floors applied plus indefinite covariances repaired
};

inline constexpr double kVarianceFloor = 1e-12;

/// k_a(u_i, u_j) * k_a(x_i, x_j) for output dimension `a`.
double separated_kernel_eval(const Vec& xi, const Vec& ui, const Vec& xj, const Vec& uj,
                             const gp::GPHyperparams& hp, int a);

/// One moment-matching step. `b` covers the model's full input state
/// (dimension state_dim); the result covers the predicted dimensions
/// (output_dim). For delta-target models the result is the next-state belief
/// x + delta including the input/output cross-covariance.
BeliefState propagate(const gp::GPModel& model, const BeliefState& b, const Vec& u,
                      PropagationStats* stats = nullptr, MomentMatchWorkspace* ws = nullptr);

/// Serial element-wise reference of propagate().
BeliefState propagate_reference(const gp::GPModel& model, const BeliefState& b, const Vec& u,
                                PropagationStats* stats = nullptr, MomentMatchWorkspace* ws = nullptr);

struct RolloutOptions {
  /// Carry only means between steps: each step starts from a zero-covariance
  /// belief, so predictions chain plain GP means.
  bool mean_only = false;
  /// Predicted dimensions holding angles in degrees; their means are wrapped
  /// into (-180, 180] between steps.
  std::vector<int> angle_dims;
};

/// H-step recursion. `b0` covers the predicted dimensions; `exogenous`
/// (state_dim - output_dim entries) is frozen at its initial value with zero
/// variance. Each returned belief covers the full input state; its exogenous
/// rows and columns are structurally zero.
std::vector<BeliefState> rollout(const gp::GPModel& model, const BeliefState& b0, const std::vector<Vec>& controls,
                                 const Vec& exogenous, const RolloutOptions& options = {},
                                 PropagationStats* stats = nullptr);

/// Belief over the full input state: predicted block from `b`, exogenous block
/// frozen with zero variance.
BeliefState extend_with_exogenous(const BeliefState& b, const Vec& exogenous);

}  // namespace spmpc::propagation
