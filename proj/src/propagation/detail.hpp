#pragma once

#include "spmpc/propagation.hpp"

namespace spmpc::propagation::detail {

/// Moments of the GP outputs f(x*, u*) before target-mode handling.
struct RawMoments {
  Vec mean;    // E
  Mat cov;     // E x E
  Mat io_cov;  // D x E, cov(x*, f); only filled for delta targets
};

/// Shape checks shared by both implementations.
void check_inputs(const gp::GPModel& model, const BeliefState& b, const Vec& u);

/// Applies the target mode, symmetrizes, checks finiteness, clips negative
/// eigenvalues and floors the diagonal.
BeliefState finish(const gp::GPModel& model, const BeliefState& b, RawMoments raw, PropagationStats* stats);

}  // namespace spmpc::propagation::detail
