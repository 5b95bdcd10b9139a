#include <unistd.h>

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "hjbflow/checkpoint.hpp"
#include "hjbflow/lbfgs.hpp"
#include "hjbflow/rng.hpp"
#include "hjbflow/value_net.hpp"
#include "support/finite_difference.hpp"

using namespace hjbflow;
using hjbflow::testing::central_gradient;

namespace {

ModelSpec small_spec(int state_dim, std::vector<int> hidden,
                     bool time_dependent = false) {
  ModelSpec spec;
  spec.hidden = std::move(hidden);
  spec.time_dependent = time_dependent;
  spec.state_dim = state_dim;
  spec.final_time = 2.0;
  spec.state_box.lo = VectorXd::Constant(state_dim, -1.5);
  spec.state_box.hi = VectorXd::Constant(state_dim, 2.5);
  return spec;
}

MlpValueModel random_model(std::uint64_t seed, const ModelSpec& spec,
                           double v_scale = 1.0, double lambda_scale = 1.0) {
  MlpValueModel model = init_params(seed, spec);
  OutputScaling scaling;
  scaling.v_scale = v_scale;
  scaling.lambda_scale = lambda_scale;
  scaling.valid = true;
  model.set_output_scaling(scaling);
  return model;
}

TrainingBatch random_batch(std::uint64_t seed, const MlpValueModel& model,
                           int count) {
  Rng rng(seed);
  TrainingBatch batch;
  batch.inputs.resize(model.input_dim(), count);
  batch.value_targets.resize(count);
  batch.lambda_targets.resize(model.spec().state_dim, count);
  for (int j = 0; j < count; ++j) {
    for (int i = 0; i < model.input_dim(); ++i) {
      batch.inputs(i, j) = rng.uniform(-1.0, 1.0);
    }
    batch.value_targets[j] = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < model.spec().state_dim; ++i) {
      batch.lambda_targets(i, j) = rng.uniform(-1.0, 1.0);
    }
  }
  return batch;
}

}  // namespace

TEST_CASE("zero-parameter model is constant zero with zero gradient") {
  const auto spec = small_spec(4, {8, 8});
  MlpValueModel model(spec);
  OutputScaling scaling;
  scaling.valid = true;
  scaling.v_scale = 3.0;
  model.set_output_scaling(scaling);

  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    const VectorXd x = rng.uniform_in_box(spec.state_box);
    CHECK(model.value(0.0, x) == 0.0);
    CHECK(model.value_gradient(0.0, x).norm() == 0.0);
  }
}

TEST_CASE("single linear layer reproduces the scaled inner product") {
  const auto spec = small_spec(3, {});
  MlpValueModel model(spec);
  OutputScaling scaling;
  scaling.valid = true;
  model.set_output_scaling(scaling);
  model.mutable_weights()[0] << 0.5, -1.25, 2.0;

  Rng rng(2);
  for (int i = 0; i < 5; ++i) {
    const VectorXd x = rng.uniform_in_box(spec.state_box);
    const VectorXd scaled = model.scale_input(0.0, x);
    const double expected = 0.5 * scaled[0] - 1.25 * scaled[1] + 2.0 * scaled[2];
    CHECK(model.value(0.0, x) == doctest::Approx(expected).epsilon(1e-15));

    // Constant gradient: weight row times the input scaling chain.
    const VectorXd grad = model.value_gradient(0.0, x);
    for (int k = 0; k < 3; ++k) {
      const double chain =
          2.0 / (spec.state_box.hi[k] - spec.state_box.lo[k]);
      CHECK(grad[k] == doctest::Approx(model.weights()[0](0, k) * chain));
    }
  }
}

TEST_CASE("input scaling round-trips to 1e-12") {
  const auto spec = small_spec(5, {8}, true);
  const MlpValueModel model = random_model(7, spec);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const double t = rng.uniform(0.0, spec.final_time);
    const VectorXd x = rng.uniform_in_box(spec.state_box);
    const VectorXd roundtrip = model.unscale_input(model.scale_input(t, x));
    CHECK(std::abs(roundtrip[0] - t) <= 1e-12);
    CHECK((roundtrip.tail(5) - x).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("input gradient matches finite differences (n = 6)") {
  const auto spec = small_spec(6, {10, 8});
  const MlpValueModel model = random_model(11, spec, 2.5, 1.0);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const VectorXd x = rng.uniform_in_box(spec.state_box);
    const VectorXd got = model.value_gradient(0.0, x);
    const VectorXd fd = central_gradient(
        [&](const VectorXd& xx) { return model.value(0.0, xx); }, x, 1e-5);
    CHECK(hjbflow::testing::relative_error(got, fd) <= 1e-6);
  }
}

TEST_CASE("time-dependent models do not differentiate in t") {
  const auto spec = small_spec(3, {8}, true);
  const MlpValueModel model = random_model(13, spec);
  Rng rng(7);
  const VectorXd x = rng.uniform_in_box(spec.state_box);
  const VectorXd g1 = model.value_gradient(0.3, x);
  CHECK(g1.size() == 3);
  // Gradient in x only; value still depends on t.
  CHECK(model.value(0.3, x) != model.value(1.1, x));
}

TEST_CASE("corrupt parameters raise a model error") {
  const auto spec = small_spec(2, {4});
  MlpValueModel model = random_model(17, spec);
  VectorXd theta = model.pack_parameters();
  theta[3] = std::numeric_limits<double>::quiet_NaN();
  model.unpack_parameters(theta);
  CHECK_FALSE(model.parameters_finite());
  CHECK_THROWS_AS(model.value(0.0, VectorXd::Zero(2)), NumericError);
}

TEST_CASE("loss vanishes when the model reproduces its own targets") {
  const auto spec = small_spec(4, {8, 8});
  const MlpValueModel model = random_model(19, spec, 1.7, 2.3);
  TrainingBatch batch = random_batch(23, model, 32);
  // Overwrite targets with the model's own predictions (scaled spaces).
  const auto& box = spec.state_box;
  for (int j = 0; j < 32; ++j) {
    const VectorXd x = model.unscale_input(batch.inputs.col(j));
    batch.value_targets[j] =
        model.value(0.0, x) / model.output_scaling().v_scale;
    batch.lambda_targets.col(j) =
        model.value_gradient(0.0, x) / model.output_scaling().lambda_scale;
    (void)box;
  }
  const LossReport report = physics_informed_loss(model, batch, 4.0);
  CHECK(report.total <= 1e-22);
  CHECK(report.gradient.norm() <= 1e-10);
}

TEST_CASE("loss decomposition identity and the mu = 0 regression limit") {
  const auto spec = small_spec(3, {6, 6});
  const MlpValueModel model = random_model(29, spec);
  const TrainingBatch batch = random_batch(31, model, 64);

  const LossReport full = physics_informed_loss(model, batch, 2.5);
  CHECK(full.total ==
        doctest::Approx(full.loss_v + 2.5 * full.loss_lambda).epsilon(1e-12));

  const LossReport regression = physics_informed_loss(model, batch, 0.0);
  CHECK(regression.total == doctest::Approx(regression.loss_v));

  // Chunked parallel evaluation is bit-identical to serial.
  const LossReport parallel = physics_informed_loss(model, batch, 2.5, 2);
  CHECK(parallel.total == full.total);
  CHECK((parallel.gradient - full.gradient).norm() == 0.0);
}

TEST_CASE("empty batch is rejected") {
  const auto spec = small_spec(2, {4});
  const MlpValueModel model = random_model(37, spec);
  TrainingBatch batch;
  batch.inputs.resize(2, 0);
  batch.value_targets.resize(0);
  batch.lambda_targets.resize(2, 0);
  CHECK_THROWS_AS(physics_informed_loss(model, batch, 1.0), ContractViolation);
}

TEST_CASE("loss parameter gradient matches finite differences") {
  const auto spec = small_spec(3, {8, 6});
  MlpValueModel model = random_model(41, spec, 1.3, 0.8);
  const TrainingBatch batch = random_batch(43, model, 24);
  const double mu = 0.7;

  const LossReport report = physics_informed_loss(model, batch, mu);
  VectorXd theta = model.pack_parameters();
  MlpValueModel scratch = model;

  Rng rng(47);
  const double h = 1e-6;
  for (int pick = 0; pick < 20; ++pick) {
    const auto j = static_cast<Eigen::Index>(rng.next_u64() %
                                             static_cast<std::uint64_t>(theta.size()));
    VectorXd tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    scratch.unpack_parameters(tp);
    const double fp = physics_informed_loss(scratch, batch, mu).total;
    scratch.unpack_parameters(tm);
    const double fm = physics_informed_loss(scratch, batch, mu).total;
    const double fd = (fp - fm) / (2.0 * h);
    CHECK(std::abs(report.gradient[j] - fd) /
              std::max(1e-8, std::abs(fd)) <= 1e-5);
  }
}

TEST_CASE("per-sample gradients average to the batch gradient") {
  const auto spec = small_spec(3, {6});
  const MlpValueModel model = random_model(53, spec);
  const TrainingBatch batch = random_batch(59, model, 16);
  const double mu = 1.5;

  std::vector<int> all(16);
  for (int i = 0; i < 16; ++i) all[i] = i;
  const MatrixXd per_sample = per_sample_loss_gradients(model, batch, mu, all);
  const LossReport report = physics_informed_loss(model, batch, mu);
  const VectorXd mean = per_sample.rowwise().mean();
  CHECK((mean - report.gradient).norm() <= 1e-12 * (1.0 + report.gradient.norm()));
}

TEST_CASE("init_params is deterministic, seed-sensitive, and fan-bounded") {
  const auto spec = small_spec(4, {16, 8});
  const MlpValueModel a = init_params(123, spec);
  const MlpValueModel b = init_params(123, spec);
  const MlpValueModel c = init_params(124, spec);
  CHECK((a.pack_parameters() - b.pack_parameters()).norm() == 0.0);
  CHECK((a.pack_parameters() - c.pack_parameters()).norm() > 0.0);

  for (int l = 0; l < a.layer_count(); ++l) {
    const auto& w = a.weights()[l];
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    CHECK(w.cwiseAbs().maxCoeff() <= bound);
    CHECK(a.biases()[l].norm() == 0.0);
  }
}

TEST_CASE("checkpoint round-trips bit-identically") {
  auto spec = small_spec(5, {12, 10}, true);
  MlpValueModel model = random_model(61, spec, 4.25, 0.75);
  model.provenance().seed = 98765;
  model.provenance().mu_schedule = {10.0, 10.0, 5.0};
  model.provenance().dataset_sizes = {64, 128, 256};

  const std::string path = "checkpoint_roundtrip_test.txt";
  save_checkpoint(model, path);
  const MlpValueModel loaded = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK((loaded.pack_parameters() - model.pack_parameters()).norm() == 0.0);
  CHECK(loaded.output_scaling().v_scale == model.output_scaling().v_scale);
  CHECK(loaded.provenance().seed == model.provenance().seed);
  CHECK(loaded.provenance().dataset_sizes == model.provenance().dataset_sizes);

  Rng rng(67);
  for (int i = 0; i < 10; ++i) {
    const double t = rng.uniform(0.0, spec.final_time);
    const VectorXd x = rng.uniform_in_box(spec.state_box);
    CHECK(loaded.value(t, x) == model.value(t, x));  // bit-identical
    CHECK((loaded.value_gradient(t, x) - model.value_gradient(t, x)).norm() ==
          0.0);
  }
}

TEST_CASE("loading a truncated checkpoint fails cleanly") {
  const auto spec = small_spec(2, {4});
  const MlpValueModel model = random_model(71, spec);
  const std::string path = "checkpoint_truncated_test.txt";
  save_checkpoint(model, path);
  {
    std::FILE* f = std::fopen(path.c_str(), "r+");
    REQUIRE(f != nullptr);
    std::fseek(f, 0, SEEK_END);
    const long size = std::ftell(f);
    REQUIRE(std::fclose(f) == 0);
    const int result = truncate(path.c_str(), size / 2);
    REQUIRE(result == 0);
  }
  CHECK_THROWS_AS(load_checkpoint(path), ConfigurationError);
  std::remove(path.c_str());
}

TEST_CASE("lbfgs solves a 20-dimensional SPD quadratic") {
  Rng rng(73);
  const int dim = 20;
  MatrixXd l = MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) l(i, j) = rng.uniform(-1.0, 1.0);
    l(i, i) += 5.0;
  }
  const MatrixXd a = l * l.transpose();
  VectorXd b(dim);
  for (int i = 0; i < dim; ++i) b[i] = rng.uniform(-1.0, 1.0);

  const Objective objective = [&](const VectorXd& theta, VectorXd& grad) {
    grad = a * theta - b;
    return 0.5 * theta.dot(a * theta) - b.dot(theta);
  };
  LbfgsConfig config;
  config.max_iterations = 50;
  config.grad_tolerance = 1e-10;
  config.f_decrease_tolerance = 0.0;
  const LbfgsResult result = lbfgs_minimize(objective, VectorXd::Zero(dim), config);
  // 1e-8 is the double-precision floor here: with f* = O(1), function
  // differences vanish below eps |f*| long before the gradient does, and the
  // reference L-BFGS implementations stall at the same level on this problem.
  CHECK(result.grad_norm <= 1e-8);
  CHECK(result.iterations <= 50);
  const VectorXd exact = a.ldlt().solve(b);
  CHECK((result.theta - exact).norm() <= 1e-8);
}

TEST_CASE("lbfgs reaches the Rosenbrock minimum") {
  const Objective rosenbrock = [](const VectorXd& theta, VectorXd& grad) {
    const double x = theta[0], y = theta[1];
    grad.resize(2);
    grad[0] = -400.0 * x * (y - x * x) - 2.0 * (1.0 - x);
    grad[1] = 200.0 * (y - x * x);
    const double a = y - x * x, b = 1.0 - x;
    return 100.0 * a * a + b * b;
  };
  VectorXd start(2);
  start << -1.2, 1.0;
  LbfgsConfig config;
  config.max_iterations = 500;
  config.grad_tolerance = 1e-12;
  config.f_decrease_tolerance = 0.0;
  const LbfgsResult result = lbfgs_minimize(rosenbrock, start, config);
  CHECK(std::abs(result.theta[0] - 1.0) <= 1e-6);
  CHECK(std::abs(result.theta[1] - 1.0) <= 1e-6);
}

TEST_CASE("lbfgs iterates decrease monotonically and rerun identically") {
  const auto spec = small_spec(3, {8});
  MlpValueModel model = random_model(79, spec);
  const TrainingBatch batch = random_batch(83, model, 48);
  MlpValueModel scratch = model;
  const Objective objective = [&](const VectorXd& theta, VectorXd& grad) {
    scratch.unpack_parameters(theta);
    LossReport report = physics_informed_loss(scratch, batch, 1.0);
    grad = std::move(report.gradient);
    return report.total;
  };
  LbfgsConfig config;
  config.max_iterations = 60;
  const LbfgsResult first = lbfgs_minimize(objective, model.pack_parameters(), config);
  const LbfgsResult second = lbfgs_minimize(objective, model.pack_parameters(), config);

  for (std::size_t i = 1; i < first.trace.size(); ++i) {
    CHECK(first.trace[i].value <= first.trace[i - 1].value);
  }
  REQUIRE(first.trace.size() == second.trace.size());
  CHECK((first.theta - second.theta).norm() == 0.0);
  for (std::size_t i = 0; i < first.trace.size(); ++i) {
    CHECK(first.trace[i].value == second.trace[i].value);
  }
}

TEST_CASE("lbfgs aborts on a non-finite objective") {
  const Objective bad = [](const VectorXd& theta, VectorXd& grad) {
    grad = VectorXd::Ones(theta.size());
    return std::numeric_limits<double>::quiet_NaN();
  };
  const LbfgsResult result = lbfgs_minimize(bad, VectorXd::Zero(3));
  CHECK(result.status == LbfgsStatus::kNonFiniteObjective);
}
