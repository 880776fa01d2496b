// Moment-matching throughput: vectorized kernel vs the serial reference,
// plus one full controller step, across support-set sizes.
#include "spmpc/gp_model.hpp"
#include "spmpc/mpc.hpp"
#include "spmpc/propagation.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace spmpc;

gp::GPModel make_model(int m) {
  Rng rng(42);
  gp::Dataset data(6, 2, 4);
  for (int i = 0; i < m; ++i) {
    Vec x(6), u(2), y(4);
    x << rng.uniform(-50, 450), rng.uniform(-50, 300), rng.uniform(0, 8), rng.uniform(-180, 180),
        rng.uniform(-10, 10), rng.uniform(-10, 10);
    u << rng.uniform(-30, 30), rng.uniform(-8000, 8000);
    y << x(0) + 3 * std::sin(x(3) * kDegToRad) * x(2), x(1) + 3 * std::cos(x(3) * kDegToRad) * x(2),
        0.9 * x(2) + u(1) / 4000, x(3) + 0.2 * u(0);
    data.add(x, u, y);
  }
  return gp::GPModel::build(data, gp::initial_hyperparams(data));
}

propagation::BeliefState make_belief() {
  Vec mu(6);
  mu << 100, 80, 4, 30, 2, -3;
  Mat a = Mat::Random(6, 6) * 0.5;
  return {mu, a * a.transpose() + Mat::Identity(6, 6)};
}

void BM_Propagate(benchmark::State& state) {
  const auto model = make_model(static_cast<int>(state.range(0)));
  const auto b = make_belief();
  const Vec u = sim::encode_control(5, 3000);
  for (auto _ : state) benchmark::DoNotOptimize(propagation::propagate(model, b, u));
}

void BM_PropagateReference(benchmark::State& state) {
  const auto model = make_model(static_cast<int>(state.range(0)));
  const auto b = make_belief();
  const Vec u = sim::encode_control(5, 3000);
  for (auto _ : state) benchmark::DoNotOptimize(propagation::propagate_reference(model, b, u));
}

void BM_MpcStep(benchmark::State& state) {
  const auto model = make_model(static_cast<int>(state.range(0)));
  sim::BoatState s{20, 10, 3, 40, 5, 60};
  mpc::MPCConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(mpc::mpc_step(model, s, cfg, {}, std::nullopt));
}

}  // namespace

BENCHMARK(BM_Propagate)->Arg(20)->Arg(50)->Arg(200)->Arg(500)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PropagateReference)->Arg(20)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MpcStep)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
