#include "spmpc/propagation.hpp"

#include <string>

namespace spmpc::propagation {

std::vector<BeliefState> rollout(const gp::GPModel& model, const BeliefState& b0, const std::vector<Vec>& controls,
                                 const Vec& exogenous, const RolloutOptions& options, PropagationStats* stats) {
  if (controls.empty()) throw std::invalid_argument("rollout: horizon must be >= 1");
  if (b0.dim() != model.output_dim()) throw std::invalid_argument("rollout: initial belief must cover the predicted dimensions");
  if (b0.dim() + exogenous.size() != model.state_dim()) throw std::invalid_argument("rollout: exogenous dimension mismatch");

  std::vector<BeliefState> beliefs;
  beliefs.reserve(controls.size());
  BeliefState current = extend_with_exogenous(b0, exogenous);
  for (std::size_t s = 0; s < controls.size(); ++s) {
    if (options.mean_only) current.cov.setZero();
    BeliefState next;
    try {
      next = propagate(model, current, controls[s], stats);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure("rollout step " + std::to_string(s) + ": " + e.what(), e.dimension(), e.other_dimension());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("rollout step " + std::to_string(s) + ": " + e.what());
    }
    for (int k : options.angle_dims) next.mean(k) = wrap_degrees(next.mean(k));
    current = extend_with_exogenous(next, exogenous);
    beliefs.push_back(current);
  }
  return beliefs;
}

}  // namespace spmpc::propagation
