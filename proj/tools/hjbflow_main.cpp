// Batch front end for the HJB value-learning toolkit: data generation via
// Pontryagin BVPs, physics-informed training, validation metrics, closed-loop
// simulation, and the benchmark tables. Every command is driven by one master
// seed split into named streams, so reruns with the same configuration
// reproduce the same datasets, checkpoints and simulation traces.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hjbflow/adaptive.hpp"
#include "hjbflow/burgers.hpp"
#include "hjbflow/bvp_bench.hpp"
#include "hjbflow/checkpoint.hpp"
#include "hjbflow/dataset.hpp"
#include "hjbflow/lqr.hpp"
#include "hjbflow/metrics.hpp"
#include "hjbflow/parallel.hpp"
#include "hjbflow/rigid_body.hpp"
#include "hjbflow/rng.hpp"
#include "hjbflow/simulate.hpp"
#include "hjbflow/trajectory.hpp"

namespace fs = std::filesystem;
using namespace hjbflow;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr std::int64_t kValidationIdOffset = 1LL << 40;

using Clock = std::chrono::steady_clock;
double secs(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ProblemOptions {
  std::string problem = "satellite";
  int dim = 10;  // burgers interior dimension
  RigidBodyProblem::Params satellite;
  BurgersProblem::Params burgers;
};

struct RunConfig {
  ProblemOptions problem;
  std::string mode;  // "", "t0-only", "time-dependent"
  // data generation
  int count = 512;
  int val_count = 1000;
  int march_stages = 8;
  double tol = 1e-5;
  int max_nodes = 5000;
  int march_mesh_nodes = 2;
  int warm_mesh_nodes = 33;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = all cores
  // training
  std::vector<int> hidden = {64, 64, 64};
  double mu = 10.0;
  double convergence_c = 0.25;
  double growth_cap = 2.0;
  int candidate_pool = 4096;
  int picks_per_round = 8;
  int max_rounds = 20;
  int first_round_iters = 500;
  int round_iters = 2000;
  double grad_tolerance = 1e-8;
  std::int64_t training_subset_cap = 0;
  bool adaptive = true;
  // evaluation
  double noise_sigma = 0.01 * 3.14159265358979323846;
  double hold_dt = 0.1;
  int sim_count = 20;
  bool with_lqr = false;
  bool plot_data = false;
  bool moving_horizon = false;
  bool large = false;
  std::string out_dir = "out";
  std::string data_path;
  std::string val_path;
  std::string checkpoint_path;
  int table = 1;
  int bench_count = 1000;
  int bench_pool = 1000000;
};

std::shared_ptr<const Ocp> make_problem(const ProblemOptions& opts,
                                        std::string* mode_default = nullptr) {
  if (opts.problem == "satellite") {
    if (mode_default) *mode_default = "t0-only";
    return std::make_shared<const RigidBodyProblem>(opts.satellite);
  }
  if (opts.problem == "burgers") {
    if (mode_default) *mode_default = "time-dependent";
    return std::make_shared<const BurgersProblem>(opts.dim, opts.burgers);
  }
  throw ConfigurationError("unknown problem '" + opts.problem +
                           "' (expected satellite or burgers)");
}

DatasetMode parse_mode(const std::string& mode) {
  if (mode == "t0-only") return DatasetMode::kInitialTimeOnly;
  if (mode == "time-dependent") return DatasetMode::kTimeDependent;
  throw ConfigurationError("unknown mode '" + mode + "'");
}

TrajectorySolveOptions solver_options(const RunConfig& config) {
  TrajectorySolveOptions options;
  options.tol = config.tol;
  options.max_nodes = config.max_nodes;
  options.march_initial_mesh_nodes = config.march_mesh_nodes;
  options.warm_start_mesh_nodes = config.warm_mesh_nodes;
  return options;
}

int worker_count(const RunConfig& config) {
  return config.workers > 0 ? config.workers : default_workers();
}

AdaptiveConfig adaptive_config(const RunConfig& config) {
  AdaptiveConfig cfg;
  cfg.mu = config.mu;
  cfg.convergence_c = config.convergence_c;
  cfg.growth_cap = config.growth_cap;
  cfg.candidate_pool_size = config.candidate_pool;
  cfg.picks_per_round = config.picks_per_round;
  cfg.training_subset_cap = config.training_subset_cap;
  cfg.max_rounds = config.max_rounds;
  cfg.seed = config.seed;
  cfg.workers = worker_count(config);
  cfg.solver = solver_options(config);
  cfg.hidden = config.hidden;
  cfg.first_round_optimizer.max_iterations = config.first_round_iters;
  cfg.first_round_optimizer.grad_tolerance = config.grad_tolerance;
  cfg.later_round_optimizer.max_iterations = config.round_iters;
  cfg.later_round_optimizer.grad_tolerance = config.grad_tolerance;
  return cfg;
}

struct GenerationOutcome {
  std::vector<TrajectoryData> trajectories;
  int attempts = 0;
  int failures = 0;
  double seconds = 0.0;
};

GenerationOutcome generate_trajectories(const Ocp& ocp, int count,
                                        std::uint64_t stream_seed,
                                        const RunConfig& config) {
  const auto t0 = Clock::now();
  const auto march = linear_march_times(ocp.final_time(), config.march_stages);
  GenerationReport report = generate_uniform_trajectories(
      ocp, count, stream_seed, TimeMarchMethod{march}, solver_options(config),
      worker_count(config));
  GenerationOutcome outcome;
  outcome.trajectories = std::move(report.trajectories);
  outcome.attempts = report.attempts;
  outcome.failures = report.failures;
  outcome.seconds = secs(t0);
  return outcome;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot open for writing: " + path);
  out << content;
}

int cmd_generate(const RunConfig& config) {
  std::string mode_name = config.mode;
  std::string mode_default;
  const auto ocp = make_problem(config.problem, &mode_default);
  if (mode_name.empty()) mode_name = mode_default;
  const DatasetMode mode = parse_mode(mode_name);

  fs::create_directories(config.out_dir);

  const auto train_out = generate_trajectories(
      *ocp, config.count, splitmix64(config.seed ^ fnv1a64("ic-sampling")),
      config);
  Dataset train = dataset_from_trajectories(train_out.trajectories, mode,
                                            ocp->name(), ocp->state_dim(), 0);
  train.set_generation_seed(config.seed);
  train.set_output_scaling(train.compute_output_scaling());
  train.save(config.out_dir + "/train.csv");

  const auto val_out = generate_trajectories(
      *ocp, config.val_count, splitmix64(config.seed ^ fnv1a64("validation-ic")),
      config);
  Dataset val = dataset_from_trajectories(val_out.trajectories, mode,
                                          ocp->name(), ocp->state_dim(),
                                          kValidationIdOffset);
  val.set_generation_seed(config.seed);
  val.save(config.out_dir + "/val.csv");

  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "problem %s\nmode %s\ntrain_trajectories %zu\n"
                "train_records %lld\ntrain_attempts %d\ntrain_failures %d\n"
                "train_seconds %.2f\nval_trajectories %zu\nval_records %lld\n"
                "val_attempts %d\nval_failures %d\nval_seconds %.2f\n",
                ocp->name().c_str(), mode_name.c_str(),
                train_out.trajectories.size(),
                static_cast<long long>(train.size()), train_out.attempts,
                train_out.failures, train_out.seconds,
                val_out.trajectories.size(), static_cast<long long>(val.size()),
                val_out.attempts, val_out.failures, val_out.seconds);
  write_text(config.out_dir + "/generate_report.txt", buf);
  std::cout << buf;
  return kExitSuccess;
}

int cmd_train(const RunConfig& config) {
  const auto ocp = make_problem(config.problem);
  if (config.data_path.empty()) {
    throw ConfigurationError("train requires --data pointing at a dataset CSV");
  }
  const Dataset data = Dataset::load(config.data_path);
  if (data.problem() != ocp->name() || data.state_dim() != ocp->state_dim()) {
    throw ConfigurationError("dataset '" + config.data_path +
                             "' does not match the configured problem");
  }
  fs::create_directories(config.out_dir);
  AdaptiveConfig cfg = adaptive_config(config);

  std::ofstream round_log(config.out_dir + "/rounds.log", std::ios::binary);
  const auto t0 = Clock::now();
  MlpValueModel model;
  std::string summary;
  if (config.adaptive) {
    const AdaptiveOutcome outcome =
        train_adaptive(*ocp, cfg, data, [&](const RoundReport& report) {
          round_log << report.to_line() << "\n";
          std::cout << report.to_line() << "\n";
        });
    model = outcome.model;
    outcome.training_data.save(config.out_dir + "/train_final.csv");
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "rounds %zu\nconverged %d\nfinal_points %lld\nseconds %.2f\n",
                  outcome.rounds.size(), outcome.converged ? 1 : 0,
                  static_cast<long long>(outcome.training_data.size()), secs(t0));
    summary = buf;
  } else {
    LbfgsResult trace;
    model = train_fixed(*ocp, cfg, data, &trace);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "iterations %d\nloss %.8e\ngrad_norm %.8e\nstatus %s\n"
                  "seconds %.2f\n",
                  trace.iterations, trace.value, trace.grad_norm,
                  to_string(trace.status), secs(t0));
    summary = buf;
    RoundReport report;
    report.round = 1;
    report.dataset_size = data.size();
    report.mu = cfg.mu;
    report.loss = trace.value;
    report.grad_norm = trace.grad_norm;
    report.optimizer_iterations = trace.iterations;
    round_log << report.to_line() << "\n";
  }
  save_checkpoint(model, config.out_dir + "/model.ckpt");
  write_text(config.out_dir + "/train_report.txt", summary);
  std::cout << summary;

  if (!config.val_path.empty()) {
    const Dataset val = Dataset::load(config.val_path);
    std::printf("validation RMAE %.6e RML2 %.6e\n", rmae(model, val),
                rml2(model, val));
  }
  return kExitSuccess;
}

int cmd_validate(const RunConfig& config) {
  if (config.checkpoint_path.empty() || config.data_path.empty()) {
    throw ConfigurationError("validate requires --checkpoint and --data");
  }
  const MlpValueModel model = load_checkpoint(config.checkpoint_path);
  const Dataset val = Dataset::load(config.data_path);
  const double value_err = rmae(model, val);
  const double grad_err = rml2(model, val);
  fs::create_directories(config.out_dir);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "rmae,rml2\n%.17g,%.17g\n", value_err, grad_err);
  write_text(config.out_dir + "/metrics.csv", buf);
  std::printf("RMAE %.6e\nRML2 %.6e\n", value_err, grad_err);
  return kExitSuccess;
}

void write_series_csv(const std::string& path, const std::string& header,
                      const std::vector<double>& times, const MatrixXd& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot open for writing: " + path);
  out << header << "\n";
  char buf[40];
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.10g", times[i]);
    out << buf;
    for (Eigen::Index r = 0; r < series.rows(); ++r) {
      std::snprintf(buf, sizeof(buf), "%.10g", series(r, static_cast<Eigen::Index>(i)));
      out << ',' << buf;
    }
    out << '\n';
  }
}

MatrixXd hold_series(const SimResult& sim) {
  // Controls repeated on the stored trace grid (zero-order hold).
  const int per_hold = static_cast<int>((sim.times.size() - 1) /
                                        std::max<std::size_t>(1, sim.hold_times.size()));
  MatrixXd out(sim.controls.rows(), static_cast<Eigen::Index>(sim.times.size()));
  for (std::size_t i = 0; i < sim.times.size(); ++i) {
    const auto hold = std::min<std::size_t>(
        sim.hold_times.size() - 1, i == 0 ? 0 : (i - 1) / per_hold);
    out.col(static_cast<Eigen::Index>(i)) =
        sim.controls.col(static_cast<Eigen::Index>(hold));
  }
  return out;
}

int cmd_simulate(const RunConfig& config) {
  const auto ocp = make_problem(config.problem);
  if (config.checkpoint_path.empty()) {
    throw ConfigurationError("simulate requires --checkpoint");
  }
  const MlpValueModel model = load_checkpoint(config.checkpoint_path);
  if (model.spec().state_dim != ocp->state_dim()) {
    throw ConfigurationError("checkpoint does not match the configured problem");
  }
  fs::create_directories(config.out_dir);

  const bool moving_horizon =
      !model.spec().time_dependent || config.moving_horizon;
  const Controller nn = make_nn_controller(*ocp, model, moving_horizon);

  OracleOptions oracle;
  oracle.model = &model;
  oracle.solver = solver_options(config);
  oracle.march_times = linear_march_times(ocp->final_time(), config.march_stages);

  SimOptions sim;
  sim.hold_dt = config.hold_dt;
  sim.noise_sigma = config.noise_sigma;

  const std::uint64_t noise_parent = splitmix64(config.seed ^ fnv1a64("noise"));
  Rng ic_rng = Rng::stream(config.seed, "sim-ic");

  std::ofstream summary(config.out_dir + "/sim_summary.csv", std::ios::binary);
  summary << "ic,cost_nn,cost_oracle,ratio_nn";
  const bool with_lqr = config.with_lqr && ocp->name() == "satellite";
  std::unique_ptr<LqrBaseline> lqr;
  if (with_lqr) {
    lqr = std::make_unique<LqrBaseline>(*ocp);
    summary << ",cost_lqr,ratio_lqr";
  }
  summary << ",terminal_norm,diverged\n";

  double ratio_sum = 0.0, lqr_ratio_sum = 0.0;
  int scored = 0;
  for (int i = 0; i < config.sim_count; ++i) {
    const VectorXd x0 = ic_rng.uniform_in_box(ocp->domain());
    sim.noise_seed = splitmix64(noise_parent ^
                                (0x9e3779b97f4a7c15ULL * (i + 1)));
    const SimResult run = simulate_closed_loop(*ocp, nn, x0, sim);
    double oracle_cost = std::numeric_limits<double>::quiet_NaN();
    try {
      oracle_cost = optimal_cost_oracle(*ocp, x0, oracle);
    } catch (const NumericError&) {
    }
    char buf[256];
    const double ratio = run.cost / oracle_cost;
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g", i, run.cost,
                  oracle_cost, ratio);
    summary << buf;
    if (with_lqr) {
      const SimResult lqr_run = simulate_closed_loop(*ocp, lqr->controller(), x0, sim);
      std::snprintf(buf, sizeof(buf), ",%.10g,%.10g", lqr_run.cost,
                    lqr_run.cost / oracle_cost);
      summary << buf;
      if (std::isfinite(oracle_cost)) lqr_ratio_sum += lqr_run.cost / oracle_cost;
    }
    std::snprintf(buf, sizeof(buf), ",%.10g,%d\n", run.terminal_state_norm,
                  run.diverged ? 1 : 0);
    summary << buf;
    if (std::isfinite(oracle_cost)) {
      ratio_sum += ratio;
      scored += 1;
    }

    if (config.plot_data && i == 0) {
      // Time series of the first run for figure-style plots.
      std::string header = "t";
      for (int s = 1; s <= ocp->state_dim(); ++s) header += ",x" + std::to_string(s);
      write_series_csv(config.out_dir + "/fig_states.csv", header, run.times,
                       run.states);
      std::string uheader = "t";
      for (int s = 1; s <= ocp->control_dim(); ++s) uheader += ",u" + std::to_string(s);
      write_series_csv(config.out_dir + "/fig_controls.csv", uheader, run.times,
                       hold_series(run));
    }
  }
  if (scored > 0) {
    std::printf("mean cost ratio (NN/oracle) over %d ICs: %.6f\n", scored,
                ratio_sum / scored);
    if (with_lqr) {
      std::printf("mean cost ratio (LQR/oracle): %.6f\n", lqr_ratio_sum / scored);
    }
  }
  return kExitSuccess;
}

int cmd_bench(const RunConfig& config) {
  const auto ocp = make_problem(config.problem);
  fs::create_directories(config.out_dir);
  const int workers = worker_count(config);
  const auto solver = solver_options(config);

  if (config.table == 1 || config.table == 4) {
    // Time-marching convergence versus the number of continuation stages.
    std::vector<VectorXd> ics;
    if (config.table == 1) {
      if (config.checkpoint_path.empty()) {
        throw ConfigurationError(
            "table 1 requires --checkpoint (reference model for hard-IC ranking)");
      }
      const MlpValueModel reference = load_checkpoint(config.checkpoint_path);
      ics = select_candidates(reference, ocp->domain(), config.bench_pool,
                              config.bench_count,
                              splitmix64(config.seed ^ fnv1a64("candidate-pool")));
    } else {
      Rng rng = Rng::stream(config.seed, "bench-ic");
      for (int i = 0; i < config.bench_count; ++i) {
        ics.push_back(rng.uniform_in_box(ocp->domain()));
      }
    }
    std::vector<BenchMethodSpec> methods;
    const std::vector<int> stages = config.table == 1
                                        ? std::vector<int>{1, 2, 3, 4, 8}
                                        : std::vector<int>{4, 6, 10};
    for (int k : stages) {
      methods.push_back({"time-march-K" + std::to_string(k),
                         TimeMarchMethod{linear_march_times(ocp->final_time(), k)}});
    }
    const auto rows = bvp_benchmark(*ocp, ics, methods, solver, workers);
    const std::string path =
        config.out_dir + "/table" + std::to_string(config.table) + ".csv";
    write_benchmark_csv(rows, path);
    for (const auto& row : rows) {
      std::printf("%s: %.1f%% converged, mean %.3f s\n", row.label.c_str(),
                  100.0 * row.convergence_fraction, row.mean_solve_seconds);
    }
    return kExitSuccess;
  }

  if (config.table == 2 || config.table == 5) {
    // Warm-start convergence with low-fidelity models of varying mu.
    if (config.data_path.empty()) {
      throw ConfigurationError("tables 2/5 require --data (small training set)");
    }
    const Dataset data = Dataset::load(config.data_path);
    std::vector<VectorXd> ics;
    if (config.table == 2) {
      if (config.checkpoint_path.empty()) {
        throw ConfigurationError("table 2 requires --checkpoint for hard-IC ranking");
      }
      const MlpValueModel reference = load_checkpoint(config.checkpoint_path);
      ics = select_candidates(reference, ocp->domain(), config.bench_pool,
                              config.bench_count,
                              splitmix64(config.seed ^ fnv1a64("candidate-pool")));
    } else {
      Rng rng = Rng::stream(config.seed, "bench-ic");
      for (int i = 0; i < config.bench_count; ++i) {
        ics.push_back(rng.uniform_in_box(ocp->domain()));
      }
    }
    std::vector<MlpValueModel> models;
    std::vector<BenchMethodSpec> methods;
    const std::vector<double> mus = {1e-8, 1e-4, 1.0};
    models.reserve(mus.size());
    for (double mu : mus) {
      AdaptiveConfig cfg = adaptive_config(config);
      cfg.mu = mu;
      models.push_back(train_fixed(*ocp, cfg, data));
    }
    for (std::size_t i = 0; i < mus.size(); ++i) {
      char label[48];
      std::snprintf(label, sizeof(label), "warm-start-mu%.0e", mus[i]);
      methods.push_back({label, WarmStartMethod{&models[i]}});
    }
    const auto rows = bvp_benchmark(*ocp, ics, methods, solver, workers);
    const std::string path =
        config.out_dir + "/table" + std::to_string(config.table) + ".csv";
    write_benchmark_csv(rows, path);
    for (const auto& row : rows) {
      std::printf("%s: %.1f%% converged, mean %.3f s\n", row.label.c_str(),
                  100.0 * row.convergence_fraction, row.mean_solve_seconds);
    }
    return kExitSuccess;
  }

  if (config.table == 3) {
    // Validation accuracy of adaptively trained Burgers models by dimension.
    if (config.problem.problem != "burgers") {
      throw ConfigurationError("table 3 is defined for the burgers problem");
    }
    std::vector<int> dims = {10};
    if (config.large) dims = {10, 20, 30};
    std::ofstream out(config.out_dir + "/table3.csv", std::ios::binary);
    out << "n,num_trajectories,train_seconds,value_rmae,gradient_rml2\n";
    for (int n : dims) {
      ProblemOptions popts = config.problem;
      popts.dim = n;
      const auto prob = make_problem(popts);
      RunConfig sub = config;
      sub.problem = popts;
      const auto t0 = Clock::now();
      const auto train_out = generate_trajectories(
          *prob, 30, splitmix64(config.seed ^ fnv1a64("ic-sampling")), sub);
      Dataset train = dataset_from_trajectories(
          train_out.trajectories, DatasetMode::kTimeDependent, prob->name(),
          prob->state_dim(), 0);
      const auto val_out = generate_trajectories(
          *prob, 50, splitmix64(config.seed ^ fnv1a64("validation-ic")), sub);
      const Dataset val = dataset_from_trajectories(
          val_out.trajectories, DatasetMode::kTimeDependent, prob->name(),
          prob->state_dim(), kValidationIdOffset);

      AdaptiveConfig cfg = adaptive_config(sub);
      const AdaptiveOutcome outcome = train_adaptive(*prob, cfg, train);
      const double elapsed = secs(t0);
      const double value_err = rmae(outcome.model, val);
      const double grad_err = rml2(outcome.model, val);
      const auto trajectories =
          outcome.training_data.distinct_trajectory_ids().size();
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%zu,%.1f,%.6e,%.6e\n", n, trajectories,
                    elapsed, value_err, grad_err);
      out << buf;
      std::printf("n=%d: %zu trajectories, RMAE %.3e, RML2 %.3e (%.0f s)\n", n,
                  trajectories, value_err, grad_err, elapsed);
    }
    return kExitSuccess;
  }
  throw ConfigurationError("--table must be one of 1..5");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hjbflow: neural value-function synthesis for optimal feedback control"};
  app.option_defaults()->always_capture_default(true);
  app.set_config("--config", "", "Read options from a key/value config file");
  app.require_subcommand(1);

  RunConfig config;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--problem", config.problem.problem,
                    "Benchmark problem: satellite | burgers");
    cmd->add_option("--dim", config.problem.dim,
                    "Interior dimension (burgers only)");
    cmd->add_option("--seed", config.seed, "Master 64-bit seed");
    cmd->add_option("--workers", config.workers,
                    "Parallel workers (0 = all cores)");
    cmd->add_option("--tol", config.tol, "BVP residual tolerance");
    cmd->add_option("--max-nodes", config.max_nodes, "BVP mesh node limit");
    cmd->add_option("--march-mesh-nodes", config.march_mesh_nodes,
                    "Initial mesh size per continuation stage");
    cmd->add_option("--warm-mesh-nodes", config.warm_mesh_nodes,
                    "Warm-start guess mesh size");
    cmd->add_option("--K", config.march_stages,
                    "Time-marching continuation stages");
    cmd->add_option("--out", config.out_dir, "Output directory");
    // Problem-parameter overrides (defaults are the benchmark constants).
    auto* sat = cmd->add_option_group("satellite");
    sat->add_option("--satellite-w1", config.problem.satellite.w1);
    sat->add_option("--satellite-w2", config.problem.satellite.w2);
    sat->add_option("--satellite-w3", config.problem.satellite.w3);
    sat->add_option("--satellite-w4", config.problem.satellite.w4);
    sat->add_option("--satellite-w5", config.problem.satellite.w5);
    sat->add_option("--satellite-tf", config.problem.satellite.final_time);
    auto* bur = cmd->add_option_group("burgers");
    bur->add_option("--burgers-nu", config.problem.burgers.nu);
    bur->add_option("--burgers-alpha", config.problem.burgers.alpha);
    bur->add_option("--burgers-beta", config.problem.burgers.beta);
    bur->add_option("--burgers-w1", config.problem.burgers.w1);
    bur->add_option("--burgers-w2", config.problem.burgers.w2);
    bur->add_option("--burgers-tf", config.problem.burgers.final_time);
  };

  CLI::App* generate = app.add_subcommand(
      "generate", "Generate train/validation datasets by solving BVPs");
  add_common(generate);
  generate->add_option("--count", config.count, "Training trajectories");
  generate->add_option("--val-count", config.val_count,
                       "Validation trajectories");
  generate->add_option("--mode", config.mode,
                       "t0-only | time-dependent (problem default when empty)");

  CLI::App* train = app.add_subcommand(
      "train", "Train a value model (adaptive rounds by default)");
  add_common(train);
  train->add_option("--data", config.data_path, "Training dataset CSV");
  train->add_option("--val-data", config.val_path,
                    "Optional validation CSV to score after training");
  train->add_option("--mu", config.mu, "Gradient-loss weight");
  train->add_option("--C", config.convergence_c, "Convergence parameter");
  train->add_option("--M", config.growth_cap, "Data growth cap per round");
  train->add_option("--hidden", config.hidden, "Hidden layer widths");
  train->add_option("--pool", config.candidate_pool, "Candidate pool size");
  train->add_option("--picks", config.picks_per_round,
                    "Warm-start picks per wave");
  train->add_option("--max-rounds", config.max_rounds, "Adaptive round limit");
  train->add_option("--iters", config.round_iters,
                    "L-BFGS iterations per round (after round 1)");
  train->add_option("--first-iters", config.first_round_iters,
                    "L-BFGS iterations in round 1");
  train->add_option("--grad-tol", config.grad_tolerance,
                    "L-BFGS gradient tolerance");
  train->add_option("--subset-cap", config.training_subset_cap,
                    "Per-round training subsample cap (0 = all)");
  train->add_flag("!--fixed", config.adaptive,
                  "Single fixed-data round instead of adaptive training");

  CLI::App* validate = app.add_subcommand(
      "validate", "Score a checkpoint against a validation dataset");
  add_common(validate);
  validate->add_option("--checkpoint", config.checkpoint_path, "Model checkpoint");
  validate->add_option("--data", config.data_path, "Validation dataset CSV");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Closed-loop simulation with zero-order hold and noise");
  add_common(simulate);
  simulate->add_option("--checkpoint", config.checkpoint_path, "Model checkpoint");
  simulate->add_option("--count", config.sim_count, "Number of random ICs");
  simulate->add_option("--sigma", config.noise_sigma,
                       "Measurement noise standard deviation");
  simulate->add_option("--hold", config.hold_dt, "Zero-order hold interval");
  simulate->add_flag("--lqr", config.with_lqr, "Also run the LQR baseline");
  simulate->add_flag("--plot-data", config.plot_data,
                     "Write per-figure time-series CSVs");
  simulate->add_flag("--moving-horizon", config.moving_horizon,
                     "Evaluate a time-dependent model at t = 0");

  CLI::App* bench = app.add_subcommand(
      "bench", "Reproduce the benchmark tables (table1.csv ... table5.csv)");
  add_common(bench);
  bench->add_option("--table", config.table, "Table number 1..5");
  bench->add_option("--count", config.bench_count, "Benchmark IC count");
  bench->add_option("--pool", config.bench_pool, "Hard-IC candidate pool");
  bench->add_option("--checkpoint", config.checkpoint_path,
                    "Reference model for hard-IC ranking (tables 1/2)");
  bench->add_option("--data", config.data_path,
                    "Small training set for warm-start models (tables 2/5)");
  bench->add_option("--mu", config.mu, "Gradient-loss weight (table 3)");
  bench->add_option("--C", config.convergence_c, "Convergence parameter (table 3)");
  bench->add_option("--subset-cap", config.training_subset_cap,
                    "Training subsample cap (table 3)");
  bench->add_option("--iters", config.round_iters, "L-BFGS iterations per round");
  bench->add_flag("--large", config.large, "Include n = 20, 30 rows (table 3)");

  CLI::App* dump = app.add_subcommand(
      "dump-config", "Print the effective configuration in config-file form");
  add_common(dump);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(config);
    if (train->parsed()) return cmd_train(config);
    if (validate->parsed()) return cmd_validate(config);
    if (simulate->parsed()) return cmd_simulate(config);
    if (bench->parsed()) return cmd_bench(config);
    if (dump->parsed()) {
      std::cout << app.config_to_str(true, true);
      return kExitSuccess;
    }
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
