#include <benchmark/benchmark.h>

#include "hjbflow/rigid_body.hpp"
#include "hjbflow/rng.hpp"
#include "hjbflow/value_net.hpp"

namespace {

using namespace hjbflow;

MlpValueModel satellite_model() {
  ModelSpec spec;
  spec.state_dim = 6;
  spec.final_time = 20.0;
  spec.state_box = rigid_body_ocp()->domain();
  MlpValueModel model = init_params(3, spec);
  OutputScaling scaling;
  scaling.valid = true;
  scaling.v_scale = 25.0;
  scaling.lambda_scale = 40.0;
  model.set_output_scaling(scaling);
  return model;
}

// One feedback-control evaluation: gradient of the value model at a state.
void BM_ControlEvaluation(benchmark::State& state) {
  const auto ocp = rigid_body_ocp();
  const MlpValueModel model = satellite_model();
  Rng rng(5);
  const VectorXd x = rng.uniform_in_box(ocp->domain());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ocp->optimal_control(0.0, x, model.value_gradient(0.0, x)));
  }
}
BENCHMARK(BM_ControlEvaluation);

void BM_CandidateScoring(benchmark::State& state) {
  const auto ocp = rigid_body_ocp();
  const MlpValueModel model = satellite_model();
  Rng rng(7);
  MatrixXd pool(6, state.range(0));
  for (Eigen::Index j = 0; j < pool.cols(); ++j) {
    pool.col(j) = rng.uniform_in_box(ocp->domain());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.gradient_norms_at_t0(pool));
  }
  state.SetItemsProcessed(state.iterations() * pool.cols());
}
BENCHMARK(BM_CandidateScoring)->Arg(1 << 12)->Arg(1 << 16);

void BM_PhysicsInformedLoss(benchmark::State& state) {
  const MlpValueModel model = satellite_model();
  Rng rng(11);
  const auto count = state.range(0);
  TrainingBatch batch;
  batch.inputs.resize(6, count);
  batch.value_targets.resize(count);
  batch.lambda_targets.resize(6, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    for (int i = 0; i < 6; ++i) batch.inputs(i, j) = rng.uniform(-1.0, 1.0);
    batch.value_targets[j] = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < 6; ++i) batch.lambda_targets(i, j) = rng.uniform(-1.0, 1.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(physics_informed_loss(model, batch, 10.0));
  }
  state.SetItemsProcessed(state.iterations() * count);
}
BENCHMARK(BM_PhysicsInformedLoss)->Arg(512)->Arg(4096);

}  // namespace
