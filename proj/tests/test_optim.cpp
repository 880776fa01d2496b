#include "spmpc/optim.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace spmpc;
using namespace spmpc::optim;

namespace {

double rosenbrock(const Vec& x, Vec* g) {
  const double a = 1.0 - x(0);
  const double b = x(1) - x(0) * x(0);
  if (g) {
    g->resize(2);
    (*g)(0) = -2.0 * a - 400.0 * x(0) * b;
    (*g)(1) = 200.0 * b;
  }
  return a * a + 100.0 * b * b;
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("unconstrained minimum inside the box") {
  const auto r = minimize_box(rosenbrock, Vec::Constant(2, -1.0), Vec::Constant(2, -2.0), Vec::Constant(2, 2.0),
                              BoxOptions{.max_iterations = 500});
  CHECK(r.reason == StopReason::converged);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("active bounds on a quadratic") {
  // Minimum at (3, -3), box [-1, 1]^2: solution is the corner (1, -1).
  Objective f = [](const Vec& x, Vec* g) {
    const Vec d = x - Vec{{3.0, -3.0}};
    if (g) *g = 2.0 * d;
    return d.squaredNorm();
  };
  const auto r = minimize_box(f, Vec::Zero(2), Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
  CHECK(r.x(0) == doctest::Approx(1.0));
  CHECK(r.x(1) == doctest::Approx(-1.0));
  CHECK(r.value == doctest::Approx(8.0));
}

TEST_CASE("never worse than the start and always feasible") {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    Vec x0(2);
    x0 << rng.uniform(-2, 2), rng.uniform(-2, 2);
    BoxOptions o;
    o.max_iterations = 3;
    const auto r = minimize_box(rosenbrock, x0, Vec::Constant(2, -2.0), Vec::Constant(2, 2.0), o);
    CHECK(r.value <= rosenbrock(x0, nullptr));
    CHECK((r.x.array().abs() <= 2.0).all());
  }
}

TEST_CASE("start outside the box is projected") {
  const auto r = minimize_box(rosenbrock, Vec::Constant(2, 5.0), Vec::Constant(2, -2.0), Vec::Constant(2, 2.0));
  CHECK((r.x.array().abs() <= 2.0).all());
}

TEST_CASE("finite-difference gradient, including one-sided probes at bounds") {
  auto f = [](const Vec& x) { return rosenbrock(x, nullptr); };
  const Vec lo = Vec::Constant(2, -1.0);
  const Vec hi = Vec::Constant(2, 1.0);
  for (const Vec& x : {Vec{{0.3, -0.2}}, Vec{{1.0, 1.0}}, Vec{{-1.0, 0.5}}}) {
    Vec g;
    rosenbrock(x, &g);
    const Vec fd = finite_difference_gradient(f, x, 1e-6, lo, hi);
    // One-sided probes carry O(h * f'') truncation error.
    for (int i = 0; i < 2; ++i) CHECK(std::abs(fd(i) - g(i)) <= 1e-3 * std::max(1.0, std::abs(g(i))));
  }
}

TEST_CASE("stop reasons have names") {
  CHECK(std::string(to_string(StopReason::converged)) == "converged");
  CHECK(std::string(to_string(StopReason::time_limit)) == "time_limit");
}

}  // TEST_SUITE
