#include "spmpc/optim.hpp"

#include <chrono>
#include <cmath>

namespace spmpc::optim {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::iteration_limit: return "iteration_limit";
    case StopReason::time_limit: return "time_limit";
    case StopReason::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

Vec project(const Vec& x, const Vec& lo, const Vec& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

// Mask of variables that may move: not pinned at a bound by the gradient.
Eigen::Array<bool, Eigen::Dynamic, 1> free_mask(const Vec& x, const Vec& g, const Vec& lo, const Vec& hi) {
  Eigen::Array<bool, Eigen::Dynamic, 1> free(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double tol = 1e-12 * std::max(1.0, hi(i) - lo(i));
    const bool at_lo = x(i) <= lo(i) + tol && g(i) > 0.0;
    const bool at_hi = x(i) >= hi(i) - tol && g(i) < 0.0;
    free(i) = !(at_lo || at_hi);
  }
  return free;
}

}  // namespace

BoxResult minimize_box(const Objective& f, const Vec& x0, const Vec& lower, const Vec& upper,
                       const BoxOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("minimize_box: bound dimension mismatch");
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("minimize_box: lower > upper");

  BoxResult res;
  Vec x = project(x0, lower, upper);
  Vec g(n);
  double fx = f(x, &g);
  res.evaluations = 1;
  res.x = x;
  res.value = fx;
  if (!std::isfinite(fx) || !g.allFinite()) {
    res.reason = StopReason::line_search_failed;
    return res;
  }

  Mat h = Mat::Identity(n, n);
  bool h_is_identity = true;
  res.reason = StopReason::iteration_limit;

  for (int it = 0; it < options.max_iterations; ++it) {
    if (elapsed() >= options.time_limit_s) {
      res.reason = StopReason::time_limit;
      break;
    }
    const Vec pg = project(x - g, lower, upper) - x;
    if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      res.reason = StopReason::converged;
      break;
    }

    const auto free = free_mask(x, g, lower, upper);
    const Vec gf = free.select(g, Vec::Zero(n));

    bool accepted = false;
    Vec x_new, g_new(n);
    double f_new = fx;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      Vec d;
      if (h_is_identity) {
        d = -gf;
      } else {
        Mat hf = h;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (!free(i)) {
            hf.row(i).setZero();
            hf.col(i).setZero();
          }
        }
        d = -hf * gf;
        if (d.dot(gf) >= 0.0) {
          h.setIdentity();
          h_is_identity = true;
          d = -gf;
        }
      }
      const double dmax = d.lpNorm<Eigen::Infinity>();
      if (dmax > options.max_step) d *= options.max_step / dmax;

      double alpha = 1.0;
      for (int ls = 0; ls < options.max_line_search; ++ls) {
        Vec xt = project(x + alpha * d, lower, upper);
        const Vec step = xt - x;
        if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
        const double ft = f(xt, nullptr);
        ++res.evaluations;
        if (std::isfinite(ft) && ft <= fx + 1e-4 * g.dot(step)) {
          x_new = std::move(xt);
          f_new = ft;
          accepted = true;
          break;
        }
        alpha *= 0.5;
        if (elapsed() >= options.time_limit_s) break;
      }
      if (!accepted) {
        if (h_is_identity) break;
        h.setIdentity();
        h_is_identity = true;
      }
    }
    if (!accepted) {
      res.reason = elapsed() >= options.time_limit_s ? StopReason::time_limit : StopReason::line_search_failed;
      break;
    }

    f_new = f(x_new, &g_new);
    ++res.evaluations;
    ++res.iterations;
    if (!std::isfinite(f_new) || !g_new.allFinite()) {
      res.reason = StopReason::line_search_failed;
      break;
    }

    const Vec s = x_new - x;
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (h_is_identity) h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Mat v = Mat::Identity(n, n) - rho * s * y.transpose();
      h = v * h * v.transpose() + rho * s * s.transpose();
      h_is_identity = false;
    }

    const double f_old = fx;
    x = std::move(x_new);
    g = std::move(g_new);
    fx = f_new;
    if (fx < res.value) {
      res.value = fx;
      res.x = x;
    }
    if (std::abs(f_old - fx) <= options.relative_tolerance * std::max(1.0, std::abs(fx))) {
      res.reason = StopReason::converged;
      break;
    }
  }
  return res;
}

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h,
                               const Vec& lower, const Vec& upper) {
  const Eigen::Index n = x.size();
  Vec grad(n);
  Vec probe = x;
  double f0 = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool can_up = x(i) + h <= upper(i);
    const bool can_down = x(i) - h >= lower(i);
    if (can_up && can_down) {
      probe(i) = x(i) + h;
      const double fp = f(probe);
      probe(i) = x(i) - h;
      const double fm = f(probe);
      grad(i) = (fp - fm) / (2.0 * h);
    } else {
      if (std::isnan(f0)) f0 = f(x);
      if (can_up) {
        probe(i) = x(i) + h;
        grad(i) = (f(probe) - f0) / h;
      } else if (can_down) {
        probe(i) = x(i) - h;
        grad(i) = (f0 - f(probe)) / h;
      } else {
        grad(i) = 0.0;
      }
    }
    probe(i) = x(i);
  }
  return grad;
}

}  // namespace spmpc::optim
