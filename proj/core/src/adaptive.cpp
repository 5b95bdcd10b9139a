#include "hjbflow/adaptive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hjbflow/rng.hpp"

namespace hjbflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double schedule_value(const std::vector<double>& schedule, int round,
                      double fallback) {
  if (schedule.empty()) return fallback;
  const auto idx = std::min<std::size_t>(round - 1, schedule.size() - 1);
  return schedule[idx];
}

// k distinct indices in [0, n) by partial Fisher-Yates; deterministic per rng.
std::vector<int> sample_without_replacement(std::int64_t n, std::int64_t k,
                                            Rng& rng) {
  std::vector<int> indices(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) indices[i] = static_cast<int>(i);
  const std::int64_t take = std::min(n, k);
  for (std::int64_t i = 0; i < take; ++i) {
    const std::int64_t j = i + static_cast<std::int64_t>(rng.next_u64() %
                                                         static_cast<std::uint64_t>(n - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(static_cast<std::size_t>(take));
  return indices;
}

// Sum over parameters of the unbiased sample variance of the per-sample
// gradients (columns).
double variance_sum(const MatrixXd& per_sample_grads) {
  const auto s = per_sample_grads.cols();
  const VectorXd mean = per_sample_grads.rowwise().mean();
  double total = 0.0;
  for (Eigen::Index j = 0; j < per_sample_grads.rows(); ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s; ++i) {
      const double dev = per_sample_grads(j, i) - mean[j];
      acc += dev * dev;
    }
    total += acc / static_cast<double>(s - 1);
  }
  return total;
}

double variance_statistic(const MatrixXd& per_sample_grads) {
  return std::sqrt(variance_sum(per_sample_grads));
}

void rescale_output_layer(MlpValueModel& model, const OutputScaling& updated) {
  const double ratio = model.output_scaling().v_scale / updated.v_scale;
  model.mutable_weights().back() *= ratio;
  model.mutable_biases().back() *= ratio;
  model.set_output_scaling(updated);
}

}  // namespace

std::string RoundReport::to_line() const {
  std::ostringstream out;
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return std::string(buf);
  };
  out << "round=" << round << " size=" << dataset_size << " mu=" << fmt(mu)
      << " C=" << fmt(convergence_c) << " loss=" << fmt(loss)
      << " grad_norm=" << fmt(grad_norm)
      << " variance=" << fmt(variance_statistic)
      << " threshold=" << fmt(test_threshold)
      << " passed=" << (test_passed ? 1 : 0) << " target=" << target_size
      << " new_trajectories=" << new_trajectories
      << " failed_trajectories=" << failed_trajectories
      << " optimizer_iterations=" << optimizer_iterations
      << " train_seconds=" << fmt(train_seconds)
      << " generate_seconds=" << fmt(generate_seconds);
  return out.str();
}

bool convergence_test(const MatrixXd& per_sample_grads,
                      const VectorXd& full_grad, double c, std::int64_t n) {
  HJBFLOW_REQUIRE(per_sample_grads.cols() >= 2,
                  "variance needs at least two samples");
  HJBFLOW_REQUIRE(c > 0.0, "convergence parameter must be positive");
  const double lhs = variance_statistic(per_sample_grads);
  const double rhs = c * full_grad.lpNorm<1>() *
                     std::sqrt(static_cast<double>(n));
  return lhs <= rhs;
}

std::int64_t next_sample_size(const MatrixXd& per_sample_grads,
                              const VectorXd& full_grad, double c, double m,
                              std::int64_t n_current) {
  HJBFLOW_REQUIRE(m > 1.0, "growth cap must exceed 1");
  const double sum = variance_sum(per_sample_grads);
  const double denom = c * full_grad.lpNorm<1>();
  const double cap = std::floor(m * static_cast<double>(n_current));
  double suggested = cap;
  if (denom > 0.0) {
    suggested = std::ceil(sum / (denom * denom));
  }
  const double target = std::max(static_cast<double>(n_current) + 1.0,
                                 std::min(cap, suggested));
  return static_cast<std::int64_t>(target);
}

std::vector<VectorXd> select_candidates(const MlpValueModel& model,
                                        const Box& domain, int pool_size, int k,
                                        std::uint64_t seed) {
  HJBFLOW_REQUIRE(pool_size >= k, "candidate pool smaller than the pick count");
  Rng rng(seed);
  MatrixXd pool(domain.dim(), pool_size);
  for (int j = 0; j < pool_size; ++j) pool.col(j) = rng.uniform_in_box(domain);

  const VectorXd norms = model.gradient_norms_at_t0(pool);
  std::vector<int> order(pool_size);
  for (int i = 0; i < pool_size; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (norms[a] != norms[b]) return norms[a] > norms[b];
    return a < b;
  });

  std::vector<VectorXd> picks;
  picks.reserve(k);
  for (int i = 0; i < k; ++i) picks.push_back(pool.col(order[i]));
  return picks;
}

namespace {

struct TrainRoundResult {
  LbfgsResult optimizer;
  LossReport full_report;
  MatrixXd variance_grads;
};

TrainRoundResult run_training_round(MlpValueModel& model, const Dataset& data,
                                    double mu, const LbfgsConfig& optimizer,
                                    const AdaptiveConfig& config, int round) {
  const TrainingBatch full = prepare_training_batch(model, data);

  // Optionally train on a random subset; statistics always use the full set.
  const TrainingBatch* train_batch = &full;
  TrainingBatch subset_storage;
  if (config.training_subset_cap > 0 && full.size() > config.training_subset_cap) {
    Rng rng = Rng::substream(
        splitmix64(config.seed ^ fnv1a64("train-subset")), round);
    const auto indices =
        sample_without_replacement(full.size(), config.training_subset_cap, rng);
    subset_storage = full.subset(indices);
    train_batch = &subset_storage;
  }

  MlpValueModel scratch = model;
  const Objective objective = [&](const VectorXd& theta, VectorXd& grad) {
    scratch.unpack_parameters(theta);
    LossReport report =
        physics_informed_loss(scratch, *train_batch, mu, config.workers);
    grad = std::move(report.gradient);
    return report.total;
  };

  TrainRoundResult result;
  result.optimizer = lbfgs_minimize(objective, model.pack_parameters(), optimizer);
  model.unpack_parameters(result.optimizer.theta);

  result.full_report = physics_informed_loss(model, full, mu, config.workers);

  Rng var_rng = Rng::substream(
      splitmix64(config.seed ^ fnv1a64("variance-subset")), round);
  const auto var_indices = sample_without_replacement(
      full.size(), std::max<std::int64_t>(2, config.variance_subset_cap), var_rng);
  result.variance_grads = per_sample_loss_gradients(model, full, mu, var_indices);
  return result;
}

}  // namespace

AdaptiveOutcome train_adaptive(const Ocp& ocp, const AdaptiveConfig& config,
                               const Dataset& initial_data,
                               const RoundCallback& on_round) {
  HJBFLOW_REQUIRE(!initial_data.empty(), "initial data set is empty");
  HJBFLOW_REQUIRE(initial_data.state_dim() == ocp.state_dim(),
                  "initial data does not match the problem dimension");

  AdaptiveOutcome outcome;
  outcome.training_data = initial_data;

  ModelSpec spec;
  spec.hidden = config.hidden;
  spec.time_dependent = initial_data.mode() == DatasetMode::kTimeDependent;
  spec.state_dim = ocp.state_dim();
  spec.final_time = ocp.final_time();
  spec.state_box = ocp.domain();

  outcome.model =
      init_params(splitmix64(config.seed ^ fnv1a64("nn-init")), spec);
  outcome.model.set_output_scaling(outcome.training_data.compute_output_scaling());
  outcome.model.provenance().seed = config.seed;

  const std::uint64_t pool_seed = splitmix64(config.seed ^ fnv1a64("candidate-pool"));

  for (int round = 1; round <= config.max_rounds; ++round) {
    const double mu = schedule_value(config.mu_schedule, round, config.mu);
    const double c =
        schedule_value(config.c_schedule, round, config.convergence_c);
    const LbfgsConfig& optimizer = round == 1 ? config.first_round_optimizer
                                              : config.later_round_optimizer;

    RoundReport report;
    report.round = round;
    report.dataset_size = outcome.training_data.size();
    report.mu = mu;
    report.convergence_c = c;

    const auto train_start = Clock::now();
    const TrainRoundResult trained = run_training_round(
        outcome.model, outcome.training_data, mu, optimizer, config, round);
    report.train_seconds = seconds_since(train_start);
    report.loss = trained.full_report.total;
    report.grad_norm = trained.full_report.gradient.norm();
    report.optimizer_iterations = trained.optimizer.iterations;

    outcome.model.provenance().mu_schedule.push_back(mu);
    outcome.model.provenance().dataset_sizes.push_back(
        outcome.training_data.size());

    report.variance_statistic = variance_statistic(trained.variance_grads);
    report.test_threshold = c * trained.full_report.gradient.lpNorm<1>() *
                            std::sqrt(static_cast<double>(report.dataset_size));
    report.test_passed =
        convergence_test(trained.variance_grads, trained.full_report.gradient,
                         c, report.dataset_size);

    if (report.test_passed || round == config.max_rounds) {
      outcome.converged = report.test_passed;
      outcome.rounds.push_back(report);
      if (on_round) on_round(report);
      return outcome;
    }

    const std::int64_t n_current = outcome.training_data.size();
    const std::int64_t target =
        next_sample_size(trained.variance_grads, trained.full_report.gradient,
                         c, config.growth_cap, n_current);
    const std::int64_t hard_cap = static_cast<std::int64_t>(
        std::floor(config.growth_cap * static_cast<double>(n_current)));
    report.target_size = target;

    const auto generate_start = Clock::now();
    int attempts = 0;
    int failures = 0;
    int wave = 0;
    while (outcome.training_data.size() < target) {
      const std::uint64_t wave_seed = splitmix64(
          pool_seed ^ (0x9e3779b97f4a7c15ULL *
                       (static_cast<std::uint64_t>(round) * 1024 + wave)));
      const auto picks =
          select_candidates(outcome.model, ocp.domain(),
                            config.candidate_pool_size, config.picks_per_round,
                            wave_seed);
      const auto results = solve_trajectory_batch(
          ocp, picks, WarmStartMethod{&outcome.model}, config.solver,
          config.workers);
      for (const auto& r : results) {
        attempts += 1;
        if (!r.converged) {
          failures += 1;
          continue;
        }
        outcome.training_data.append_trajectory(
            r.data, outcome.training_data.max_trajectory_id() + 1);
        report.new_trajectories += 1;
        if (outcome.training_data.size() >= target) break;
      }
      if (outcome.training_data.size() > hard_cap) {
        outcome.training_data.truncate(hard_cap);
      }
      report.failed_trajectories = failures;
      if (attempts >= 16 && failures * 2 > attempts) {
        throw NumericError(
            "adaptive data generation is failing: " + std::to_string(failures) +
            " of " + std::to_string(attempts) +
            " warm-start BVPs diverged in round " + std::to_string(round));
      }
      wave += 1;
    }
    report.generate_seconds = seconds_since(generate_start);

    rescale_output_layer(outcome.model,
                         outcome.training_data.compute_output_scaling());

    outcome.rounds.push_back(report);
    if (on_round) on_round(report);
  }
  return outcome;
}

MlpValueModel train_fixed(const Ocp& ocp, const AdaptiveConfig& config,
                          const Dataset& data, LbfgsResult* trace) {
  HJBFLOW_REQUIRE(!data.empty(), "training data set is empty");

  ModelSpec spec;
  spec.hidden = config.hidden;
  spec.time_dependent = data.mode() == DatasetMode::kTimeDependent;
  spec.state_dim = ocp.state_dim();
  spec.final_time = ocp.final_time();
  spec.state_box = ocp.domain();

  MlpValueModel model =
      init_params(splitmix64(config.seed ^ fnv1a64("nn-init")), spec);
  model.set_output_scaling(data.compute_output_scaling());
  model.provenance().seed = config.seed;
  model.provenance().mu_schedule.push_back(config.mu);
  model.provenance().dataset_sizes.push_back(data.size());

  const TrainingBatch batch = prepare_training_batch(model, data);
  MlpValueModel scratch = model;
  const Objective objective = [&](const VectorXd& theta, VectorXd& grad) {
    scratch.unpack_parameters(theta);
    LossReport report =
        physics_informed_loss(scratch, batch, config.mu, config.workers);
    grad = std::move(report.gradient);
    return report.total;
  };
  const LbfgsResult result = lbfgs_minimize(objective, model.pack_parameters(),
                                            config.later_round_optimizer);
  model.unpack_parameters(result.theta);
  if (trace) *trace = result;
  return model;
}

}  // namespace hjbflow
