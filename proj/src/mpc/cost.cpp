#include "spmpc/mpc.hpp"

#include <cmath>
#include <stdexcept>

namespace spmpc::mpc {

std::string to_string(CostKind k) { return k == CostKind::euclidean ? "euclidean" : "mahalanobis"; }

CostKind cost_kind_from_string(const std::string& s) {
  if (s == "euclidean") return CostKind::euclidean;
  if (s == "mahalanobis") return CostKind::mahalanobis;
  throw std::invalid_argument("unknown cost function: " + s);
}

void MPCConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("mpc: horizon must be >= 1");
  if (!(discount >= 0.0 && discount <= 1.0)) throw std::invalid_argument("mpc: discount must lie in [0, 1]");
  if (!(sigma_c > 0.0)) throw std::invalid_argument("mpc: sigma_c must be positive");
  if (max_iterations < 0) throw std::invalid_argument("mpc: max_iterations must be >= 0");
  if (!(time_limit_s > 0.0)) throw std::invalid_argument("mpc: time limit must be positive");
  if (!(gradient_step > 0.0)) throw std::invalid_argument("mpc: gradient step must be positive");
  if (!(t_opt >= 0.0)) throw std::invalid_argument("mpc: t_opt must be >= 0");
  if (!(control_penalty >= 0.0)) throw std::invalid_argument("mpc: control penalty must be >= 0");
  if (std::abs(initial_steering) > sim::kSteeringLimit || std::abs(initial_throttle) > sim::kThrottleLimit) {
    throw std::invalid_argument("mpc: initial control out of bounds");
  }
}

void TargetSpec::validate() const {
  if (!std::isfinite(x) || !std::isfinite(y)) throw std::invalid_argument("mpc: non-finite target");
}

namespace {

Eigen::Vector2d position_error(const BeliefState& b, const TargetSpec& target) {
  if (b.dim() < 2) throw std::invalid_argument("mpc: belief lacks position dimensions");
  return {b.mean(kPosX) - target.x, b.mean(kPosY) - target.y};
}

}  // namespace

double euclidean_cost(const BeliefState& b, const TargetSpec& target) {
  return 0.5 * position_error(b, target).squaredNorm();
}

double mahalanobis_cost(const BeliefState& b, const TargetSpec& target, double sigma_c) {
  const Eigen::Vector2d d = position_error(b, target);
  const double w_inv = sigma_c * sigma_c;
  Eigen::Matrix2d sp = Eigen::Matrix2d::Zero();
  if (b.cov.rows() >= 2 && b.cov.cols() >= 2) sp = b.cov.topLeftCorner<2, 2>();
  const Eigen::Matrix2d inner = Eigen::Matrix2d::Identity() + sp * w_inv;
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(inner);
  if (!lu.isInvertible()) throw NumericalFailure("mahalanobis cost: singular I + Sigma_P W^-1");
  const Eigen::Matrix2d s = w_inv * lu.inverse();
  return 0.5 * d.dot(s * d);
}

double long_term_cost(const gp::GPModel& model, const BeliefState& b0, const ControlSequence& seq,
                      const MPCConfig& cfg, const TargetSpec& target, propagation::PropagationStats* stats,
                      std::vector<BeliefState>* trajectory) {
  const int e = model.output_dim();
  if (b0.dim() != model.state_dim()) throw std::invalid_argument("long_term_cost: belief dimension mismatch");
  if (!seq.within_bounds()) throw std::invalid_argument("long_term_cost: control sequence out of bounds");

  BeliefState head{b0.mean.head(e), b0.cov.topLeftCorner(e, e)};
  const Vec exogenous = b0.mean.tail(model.state_dim() - e);
  propagation::RolloutOptions ro;
  ro.mean_only = !cfg.use_variance;
  if (e > kHeading) ro.angle_dims = {kHeading};
  auto beliefs = propagation::rollout(model, head, seq.steps(), exogenous, ro, stats);

  double total = 0.0;
  double weight = 1.0;
  for (int s = 0; s < seq.horizon(); ++s) {
    auto& b = beliefs[static_cast<std::size_t>(s)];
    if (!cfg.use_variance) b.cov.setZero();
    double c = cfg.cost == CostKind::euclidean ? euclidean_cost(b, target) : mahalanobis_cost(b, target, cfg.sigma_c);
    if (cfg.control_penalty > 0.0) {
      const Vec u = seq.at(s);
      c += cfg.control_penalty *
           (std::pow(u(0) / sim::kSteeringLimit, 2) + std::pow(u(1) / sim::kThrottleLimit, 2));
    }
    total += weight * c;
    weight *= cfg.discount;
  }
  if (trajectory) *trajectory = std::move(beliefs);
  return total;
}

}  // namespace spmpc::mpc
