/**
 * @file optim.hpp
 * @brief Box-constrained projected quasi-Newton minimizer.
 *
 * Projected BFGS with an Armijo search along the projection arc. Variables
 * held at a bound by the gradient are frozen for the step. The returned point
 * is the best one evaluated, so the result never exceeds f(x0).
 */
#pragma once

#include "spmpc/common.hpp"

#include <functional>
#include <limits>

namespace spmpc::optim {

/// Returns f(x); fills *grad when it is non-null.
using Objective = std::function<double(const Vec& x, Vec* grad)>;

struct BoxOptions {
  int max_iterations = 100;
  double time_limit_s = std::numeric_limits<double>::infinity();
  double gradient_tolerance = 1e-6;   // on the projected gradient, inf-norm
  double relative_tolerance = 1e-10;  // on successive objective values
  int max_line_search = 20;
  /// Largest inf-norm of a trial step (before projection).
  double max_step = std::numeric_limits<double>::infinity();
};

enum class StopReason { converged, iteration_limit, time_limit, line_search_failed };

const char* to_string(StopReason r);

struct BoxResult {
  Vec x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  StopReason reason = StopReason::iteration_limit;
};

BoxResult minimize_box(const Objective& f, const Vec& x0, const Vec& lower, const Vec& upper,
                       const BoxOptions& options = {});

/// Central differences with step `h`, falling back to one-sided differences
/// where a central probe would leave [lower, upper].
Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h,
                               const Vec& lower, const Vec& upper);

}  // namespace spmpc::optim
