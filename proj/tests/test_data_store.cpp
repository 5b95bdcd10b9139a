#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "hjbflow/adaptive.hpp"
#include "hjbflow/dataset.hpp"
#include "hjbflow/metrics.hpp"
#include "hjbflow/rng.hpp"

using namespace hjbflow;

namespace {

TrajectoryData fake_trajectory(std::uint64_t seed, int n, int samples,
                               double t_f) {
  Rng rng(seed);
  TrajectoryData traj;
  traj.times.resize(samples);
  traj.times.setLinSpaced(samples, 0.0, t_f);
  traj.states.resize(n, samples);
  traj.costates.resize(n, samples);
  traj.values.resize(samples);
  for (int k = 0; k < samples; ++k) {
    for (int i = 0; i < n; ++i) {
      traj.states(i, k) = rng.uniform(-2.0, 2.0);
      traj.costates(i, k) = rng.uniform(-5.0, 5.0);
    }
    traj.values[k] = rng.uniform(0.0, 10.0);
  }
  traj.initial_state = traj.states.col(0);
  return traj;
}

}  // namespace

TEST_CASE("t0-only datasets keep one record per trajectory") {
  std::vector<TrajectoryData> trajs;
  for (int i = 0; i < 12; ++i) trajs.push_back(fake_trajectory(i, 6, 40, 20.0));
  const Dataset ds = dataset_from_trajectories(
      trajs, DatasetMode::kInitialTimeOnly, "satellite", 6);
  CHECK(ds.size() == 12);
  CHECK(ds.distinct_trajectory_ids().size() == 12);
  for (double t : ds.times()) CHECK(t == 0.0);
}

TEST_CASE("time-dependent datasets keep every mesh sample") {
  std::vector<TrajectoryData> trajs;
  int total = 0;
  for (int i = 0; i < 5; ++i) {
    trajs.push_back(fake_trajectory(100 + i, 4, 30 + i, 8.0));
    total += 30 + i;
  }
  const Dataset ds = dataset_from_trajectories(
      trajs, DatasetMode::kTimeDependent, "burgers", 4);
  CHECK(ds.size() == total);
  // Records of one trajectory form a contiguous run.
  for (std::int64_t r = 1; r < ds.size(); ++r) {
    const auto prev = ds.trajectory_ids()[r - 1];
    const auto cur = ds.trajectory_ids()[r];
    CHECK((cur == prev || cur == prev + 1));
  }
}

TEST_CASE("empty trajectory list produces a valid empty dataset") {
  const Dataset ds = dataset_from_trajectories(
      {}, DatasetMode::kInitialTimeOnly, "satellite", 6);
  CHECK(ds.empty());
  CHECK(ds.size() == 0);
}

TEST_CASE("mixed problem dimensions are rejected") {
  std::vector<TrajectoryData> trajs;
  trajs.push_back(fake_trajectory(1, 6, 10, 20.0));
  trajs.push_back(fake_trajectory(2, 4, 10, 8.0));
  CHECK_THROWS_AS(dataset_from_trajectories(trajs, DatasetMode::kInitialTimeOnly,
                                            "satellite", 6),
                  ContractViolation);
}

TEST_CASE("dataset CSV round-trips record-for-record") {
  std::vector<TrajectoryData> trajs;
  for (int i = 0; i < 4; ++i) trajs.push_back(fake_trajectory(7 + i, 3, 25, 8.0));
  Dataset ds =
      dataset_from_trajectories(trajs, DatasetMode::kTimeDependent, "burgers", 3);
  ds.set_generation_seed(42);
  ds.set_output_scaling(ds.compute_output_scaling());

  const std::string path = "dataset_roundtrip_test.csv";
  ds.save(path);

  // Column count is 2n + 3.
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    int cols = 1;
    for (char c : header) cols += (c == ',');
    CHECK(cols == 2 * 3 + 3);
    CHECK(header == "t,x1,x2,x3,V,lam1,lam2,lam3,traj");
  }

  const Dataset loaded = Dataset::load(path);
  REQUIRE(loaded.size() == ds.size());
  CHECK(loaded.problem() == "burgers");
  CHECK(loaded.mode() == DatasetMode::kTimeDependent);
  CHECK(loaded.generation_seed() == 42);
  CHECK(loaded.output_scaling().v_scale == ds.output_scaling().v_scale);
  for (std::int64_t r = 0; r < ds.size(); ++r) {
    CHECK(loaded.times()[r] == ds.times()[r]);
    CHECK(loaded.values()[r] == ds.values()[r]);
    CHECK((loaded.states().col(r) - ds.states().col(r)).norm() == 0.0);
    CHECK((loaded.costates().col(r) - ds.costates().col(r)).norm() == 0.0);
    CHECK(loaded.trajectory_ids()[r] == ds.trajectory_ids()[r]);
  }
  std::remove(path.c_str());
  std::remove((path + ".meta").c_str());
}

TEST_CASE("dataset load rejects a column-count mismatch") {
  const std::string path = "dataset_badcols_test.csv";
  {
    Dataset ds = dataset_from_trajectories({fake_trajectory(9, 2, 5, 1.0)},
                                           DatasetMode::kTimeDependent,
                                           "burgers", 2);
    ds.save(path);
  }
  // Rewrite the metadata with a wrong dimension.
  {
    std::ofstream meta(path + ".meta");
    meta << "format dataset-meta v1\nproblem burgers\nstate_dim 3\n"
            "mode time-dependent\nrecords 5\ngeneration_seed 0\nscaling_valid 0\n";
  }
  CHECK_THROWS_AS(Dataset::load(path), NumericError);
  std::remove(path.c_str());
  std::remove((path + ".meta").c_str());
}

TEST_CASE("train and validation splits share no trajectory ids") {
  std::vector<TrajectoryData> train_trajs, val_trajs;
  for (int i = 0; i < 6; ++i) train_trajs.push_back(fake_trajectory(i, 3, 10, 8.0));
  for (int i = 0; i < 3; ++i) val_trajs.push_back(fake_trajectory(50 + i, 3, 10, 8.0));
  const Dataset train = dataset_from_trajectories(
      train_trajs, DatasetMode::kTimeDependent, "burgers", 3, 0);
  const Dataset val = dataset_from_trajectories(
      val_trajs, DatasetMode::kTimeDependent, "burgers", 3, 1000000);
  CHECK_FALSE(train.shares_trajectory_ids(val));
  CHECK(train.shares_trajectory_ids(train));
}

TEST_CASE("rmae and rml2 have the documented fixed points") {
  // Build a tiny model and validation set by hand.
  ModelSpec spec;
  spec.hidden = {};
  spec.state_dim = 2;
  spec.final_time = 1.0;
  spec.state_box.lo = VectorXd::Constant(2, -1.0);
  spec.state_box.hi = VectorXd::Constant(2, 1.0);
  MlpValueModel zero_model(spec);
  OutputScaling scaling;
  scaling.valid = true;
  zero_model.set_output_scaling(scaling);

  std::vector<TrajectoryData> trajs;
  for (int i = 0; i < 5; ++i) trajs.push_back(fake_trajectory(200 + i, 2, 4, 1.0));
  const Dataset val = dataset_from_trajectories(
      trajs, DatasetMode::kInitialTimeOnly, "toy", 2);

  // Zero predictions give exactly 1 for both metrics.
  CHECK(rmae(zero_model, val) == doctest::Approx(1.0));
  CHECK(rml2(zero_model, val) == doctest::Approx(1.0));

  // Metrics are invariant under record reordering (rebuild reversed).
  std::vector<TrajectoryData> reversed(trajs.rbegin(), trajs.rend());
  const Dataset val_reversed = dataset_from_trajectories(
      reversed, DatasetMode::kInitialTimeOnly, "toy", 2);
  CHECK(rmae(zero_model, val_reversed) == doctest::Approx(rmae(zero_model, val)));
  CHECK(rml2(zero_model, val_reversed) == doctest::Approx(rml2(zero_model, val)));

  CHECK_THROWS_AS(rmae(zero_model, Dataset("toy", 2, DatasetMode::kInitialTimeOnly)),
                  ContractViolation);
}

TEST_CASE("convergence test follows the variance criterion") {
  // All per-sample gradients identical: variance 0, passes for any C > 0.
  MatrixXd same(3, 4);
  same.colwise() = Eigen::Vector3d(1.0, -2.0, 0.5);
  VectorXd full = Eigen::Vector3d(1.0, -2.0, 0.5);
  CHECK(convergence_test(same, full, 1e-12, 4));

  // Zero full gradient with nonzero variance: right side zero, fails.
  MatrixXd spread(1, 2);
  spread << -1.0, 1.0;
  CHECK_FALSE(convergence_test(spread, VectorXd::Zero(1), 10.0, 2));

  // Hand-computed case: per-sample gradients {0, 2}, full gradient 1, N = 2:
  // LHS = sqrt(2), RHS = C sqrt(2), true iff C >= 1.
  MatrixXd hand(1, 2);
  hand << 0.0, 2.0;
  VectorXd one = VectorXd::Ones(1);
  CHECK(convergence_test(hand, one, 1.0, 2));
  CHECK(convergence_test(hand, one, 1.1, 2));
  CHECK_FALSE(convergence_test(hand, one, 0.9, 2));

  CHECK_THROWS_AS(convergence_test(MatrixXd::Zero(1, 1), one, 1.0, 1),
                  ContractViolation);
}

TEST_CASE("next_sample_size applies the ratio and the growth cap") {
  // Variance 2 (unbiased, samples {0, 2}), full gradient norm 1.
  MatrixXd hand(1, 2);
  hand << 0.0, 2.0;
  VectorXd one = VectorXd::Ones(1);

  // ratio = 2 / C^2; with C = 0.5 the suggestion is 8, under the cap 2*6=12.
  CHECK(next_sample_size(hand, one, 0.5, 2.0, 6) == 8);
  // With C = 0.2 the suggestion is 50, capped at 2 * 6 = 12.
  CHECK(next_sample_size(hand, one, 0.2, 2.0, 6) == 12);
  // Never less than N + 1 even when the test would nearly pass.
  CHECK(next_sample_size(hand, one, 100.0, 2.0, 6) == 7);
  // Zero full gradient: suggestion is unbounded, cap applies.
  CHECK(next_sample_size(hand, VectorXd::Zero(1), 0.5, 2.0, 6) == 12);
}

TEST_CASE("select_candidates ranks by gradient norm with draw-order ties") {
  ModelSpec spec;
  spec.hidden = {8};
  spec.state_dim = 3;
  spec.final_time = 1.0;
  spec.state_box.lo = VectorXd::Constant(3, -1.0);
  spec.state_box.hi = VectorXd::Constant(3, 1.0);

  // Zero model: all norms equal, so picks are the first k draws.
  MlpValueModel zero_model(spec);
  OutputScaling scaling;
  scaling.valid = true;
  zero_model.set_output_scaling(scaling);
  const auto zero_picks = select_candidates(zero_model, spec.state_box, 10, 3, 7);
  Rng replay(7);
  for (int i = 0; i < 3; ++i) {
    const VectorXd expected = replay.uniform_in_box(spec.state_box);
    CHECK((zero_picks[i] - expected).norm() == 0.0);
  }

  // A trained-like random model: picks must be the top-k by gradient norm.
  MlpValueModel model = init_params(5, spec);
  model.set_output_scaling(scaling);
  const int pool = 64, k = 5;
  const auto picks = select_candidates(model, spec.state_box, pool, k, 11);
  Rng pool_replay(11);
  MatrixXd pool_points(3, pool);
  for (int j = 0; j < pool; ++j) {
    pool_points.col(j) = pool_replay.uniform_in_box(spec.state_box);
  }
  const VectorXd norms = model.gradient_norms_at_t0(pool_points);
  double kth_largest = -1.0;
  {
    std::vector<double> sorted(norms.data(), norms.data() + pool);
    std::sort(sorted.rbegin(), sorted.rend());
    kth_largest = sorted[k - 1];
  }
  for (const auto& pick : picks) {
    CHECK(model.gradient_norms_at_t0(pick)[0] >= kth_largest - 1e-15);
  }

  CHECK_THROWS_AS(select_candidates(model, spec.state_box, 2, 5, 1),
                  ContractViolation);
}

TEST_CASE("round reports serialize to single log lines") {
  RoundReport report;
  report.round = 3;
  report.dataset_size = 128;
  report.mu = 10.0;
  report.convergence_c = 0.25;
  report.test_passed = true;
  const std::string line = report.to_line();
  CHECK(line.find("round=3") != std::string::npos);
  CHECK(line.find("size=128") != std::string::npos);
  CHECK(line.find("passed=1") != std::string::npos);
  CHECK(line.find('\n') == std::string::npos);
}
