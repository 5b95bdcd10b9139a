#include <benchmark/benchmark.h>

#include "hjbflow/ivp.hpp"
#include "hjbflow/rigid_body.hpp"
#include "hjbflow/rng.hpp"
#include "hjbflow/trajectory.hpp"

namespace {

using namespace hjbflow;

void BM_SatelliteTimeMarch(benchmark::State& state) {
  const auto ocp = rigid_body_ocp();
  Rng rng(13);
  const VectorXd x0 = 0.8 * rng.uniform_in_box(ocp->domain());
  const auto march = linear_march_times(20.0, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(time_march_solve(*ocp, x0, march));
  }
}
BENCHMARK(BM_SatelliteTimeMarch)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ClosedLoopLeg(benchmark::State& state) {
  const auto ocp = rigid_body_ocp();
  Rng rng(17);
  const VectorXd x0 = 0.5 * rng.uniform_in_box(ocp->domain());
  const VectorXd u = VectorXd::Zero(3);
  const OdeRhs rhs = [&](double t, const VectorXd& x) {
    return ocp->dynamics(t, x, u);
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_ivp(rhs, 0.0, 0.1, x0, 1e-8, 1e-10));
  }
}
BENCHMARK(BM_ClosedLoopLeg)->Unit(benchmark::kMicrosecond);

}  // namespace
