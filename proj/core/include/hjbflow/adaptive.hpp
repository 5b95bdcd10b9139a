#ifndef HJBFLOW_ADAPTIVE_HPP
#define HJBFLOW_ADAPTIVE_HPP

#include <functional>
#include <vector>

#include "hjbflow/dataset.hpp"
#include "hjbflow/lbfgs.hpp"
#include "hjbflow/ocp.hpp"
#include "hjbflow/trajectory.hpp"
#include "hjbflow/value_net.hpp"

namespace hjbflow {

struct AdaptiveConfig {
  double mu = 10.0;
  double convergence_c = 0.25;
  // M, the per-round growth cap on the data-set point count.
  double growth_cap = 2.0;
  int candidate_pool_size = 4096;
  int picks_per_round = 8;
  int variance_subset_cap = 1024;
  // Training subsample per round; 0 trains on everything.
  std::int64_t training_subset_cap = 0;
  LbfgsConfig first_round_optimizer{.max_iterations = 500};
  LbfgsConfig later_round_optimizer{.max_iterations = 2000};
  int max_rounds = 20;
  std::uint64_t seed = 0;
  int workers = 1;
  TrajectorySolveOptions solver;
  std::vector<int> hidden = {64, 64, 64};
  // Optional per-round schedules; when shorter than the round count the last
  // entry is held.
  std::vector<double> mu_schedule;
  std::vector<double> c_schedule;
};

struct RoundReport {
  int round = 0;
  std::int64_t dataset_size = 0;
  double mu = 0.0;
  double convergence_c = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double variance_statistic = 0.0;  // sqrt of the summed per-parameter variance
  double test_threshold = 0.0;      // C |grad|_1 sqrt(N)
  bool test_passed = false;
  std::int64_t target_size = 0;  // next-round size when the test failed
  int new_trajectories = 0;
  int failed_trajectories = 0;
  int optimizer_iterations = 0;
  double train_seconds = 0.0;
  double generate_seconds = 0.0;

  std::string to_line() const;  // one line of structured text for run logs
};

// Practical convergence criterion: the root of the summed unbiased
// per-parameter sample variances of the per-sample loss gradients must not
// exceed C |full_grad|_1 sqrt(N), with N the full training-set size.
bool convergence_test(const MatrixXd& per_sample_grads,
                      const VectorXd& full_grad, double c, std::int64_t n);

// Sample-size rule when the test fails:
// min(M * N_current, ceil(sum Var / (C |full_grad|_1)^2)), at least
// N_current + 1.
std::int64_t next_sample_size(const MatrixXd& per_sample_grads,
                              const VectorXd& full_grad, double c, double m,
                              std::int64_t n_current);

// Uniformly samples pool_size candidates from the domain box, scores each by
// |V_x(0, x)|, and returns the k largest; ties fall back to draw order.
std::vector<VectorXd> select_candidates(const MlpValueModel& model,
                                        const Box& domain, int pool_size, int k,
                                        std::uint64_t seed);

struct AdaptiveOutcome {
  MlpValueModel model;
  std::vector<RoundReport> rounds;
  Dataset training_data;  // all points seen, supersets of every earlier round
  bool converged = false;
};

using RoundCallback = std::function<void(const RoundReport&)>;

// Algorithm: train on the current data (L-BFGS on the physics-informed
// loss), run the convergence test, and while it fails generate warm-start
// trajectories at the hardest candidate initial conditions until the point
// count reaches the sample-size rule. Data sets only ever grow. Aborts with
// NumericError when more than half of a round's BVP attempts fail.
AdaptiveOutcome train_adaptive(const Ocp& ocp, const AdaptiveConfig& config,
                               const Dataset& initial_data,
                               const RoundCallback& on_round = {});

// Single fixed-data training round (no generation, no test); used for the
// fixed-data-set studies and as the reference-model builder.
MlpValueModel train_fixed(const Ocp& ocp, const AdaptiveConfig& config,
                          const Dataset& data, LbfgsResult* trace = nullptr);

}  // namespace hjbflow

#endif  // HJBFLOW_ADAPTIVE_HPP
