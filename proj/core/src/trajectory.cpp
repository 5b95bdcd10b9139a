#include "hjbflow/trajectory.hpp"

#include <chrono>
#include <cmath>

#include "hjbflow/parallel.hpp"
#include "hjbflow/rng.hpp"

namespace hjbflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

VectorXd uniform_mesh(double t0, double t1, int nodes) {
  VectorXd mesh(nodes);
  for (int i = 0; i < nodes; ++i) {
    mesh[i] = t0 + (t1 - t0) * static_cast<double>(i) / (nodes - 1);
  }
  return mesh;
}

TrajectoryData sample_trajectory(const Ocp& ocp, const BvpSolution& sol,
                                 const Eigen::Ref<const VectorXd>& x0,
                                 GenerationMethod method, double solve_seconds) {
  const int n = ocp.state_dim();
  TrajectoryData data;
  data.initial_state = x0;
  data.times = sol.mesh;
  data.states = sol.states.topRows(n);
  data.costates = sol.states.middleRows(n, n);
  data.values = sol.states.row(2 * n);
  data.method = method;
  data.diagnostics.newton_iterations = sol.newton_iterations;
  data.diagnostics.node_count = sol.node_count();
  data.diagnostics.max_residual = sol.max_residual;
  data.diagnostics.max_bc_residual = sol.max_bc_residual;
  data.diagnostics.solve_seconds = solve_seconds;
  return data;
}

struct RolloutDivergence {};

}  // namespace

MatrixXd cold_guess(const Ocp& ocp, const Eigen::Ref<const VectorXd>& x0,
                    const VectorXd& mesh) {
  const VectorXd z0 = AugmentedState::pack(x0, ocp.terminal_cost_gradient(x0),
                                           ocp.terminal_cost(x0));
  return z0.replicate(1, mesh.size());
}

std::vector<double> linear_march_times(double final_time, int stages) {
  HJBFLOW_REQUIRE(stages >= 1, "need at least one continuation stage");
  std::vector<double> times(stages);
  for (int k = 1; k <= stages; ++k) {
    times[k - 1] = final_time * static_cast<double>(k) / stages;
  }
  times.back() = final_time;
  return times;
}

TrajectoryResult time_march_solve(const Ocp& ocp,
                                  const Eigen::Ref<const VectorXd>& x0,
                                  const std::vector<double>& march_times,
                                  const TrajectorySolveOptions& options) {
  HJBFLOW_REQUIRE(!march_times.empty(), "empty continuation sequence");
  for (std::size_t k = 0; k + 1 < march_times.size(); ++k) {
    HJBFLOW_REQUIRE(march_times[k] > 0.0 && march_times[k] < march_times[k + 1],
                    "continuation times must be positive and increasing");
  }
  HJBFLOW_REQUIRE(std::abs(march_times.back() - ocp.final_time()) <
                      1e-12 * (1.0 + ocp.final_time()),
                  "last continuation time must equal t_f");

  const auto start = Clock::now();
  const VectorXd x0_copy = x0;
  const BvpRhs rhs = [&ocp](double t, const VectorXd& z) {
    return augmented_rhs(ocp, t, z);
  };
  const BvpBc bc = [&ocp, &x0_copy](const VectorXd& za, const VectorXd& zb) {
    return terminal_bc_residual(ocp, za, zb, x0_copy);
  };

  BvpOptions bvp_options;
  bvp_options.tol = options.tol;
  bvp_options.max_nodes = options.max_nodes;

  TrajectoryResult result;
  VectorXd mesh =
      uniform_mesh(0.0, march_times[0], options.march_initial_mesh_nodes);
  MatrixXd guess = cold_guess(ocp, x0, mesh);
  int newton_total = 0;

  for (std::size_t k = 0; k < march_times.size(); ++k) {
    BvpSolution sol = solve_bvp(rhs, bc, mesh, guess, bvp_options);
    newton_total += sol.newton_iterations;
    if (!sol.converged) {
      result.converged = false;
      result.failure.failed_stage = static_cast<int>(k) + 1;
      result.failure.reason = "stage " + std::to_string(k + 1) + " of " +
                              std::to_string(march_times.size()) + ": " +
                              sol.failure_reason;
      result.bvp = std::move(sol);
      return result;
    }
    if (k + 1 < march_times.size()) {
      // Stretch the converged mesh and reuse its values on the longer horizon.
      const double scale = march_times[k + 1] / march_times[k];
      mesh = sol.mesh * scale;
      guess = sol.states;
    } else {
      result.converged = true;
      result.bvp = std::move(sol);
    }
  }
  result.bvp.newton_iterations = newton_total;
  result.data = sample_trajectory(ocp, result.bvp, x0,
                                  GenerationMethod::kTimeMarch,
                                  seconds_since(start));
  return result;
}

TrajectoryResult warm_start_solve(const Ocp& ocp,
                                  const Eigen::Ref<const VectorXd>& x0,
                                  const MlpValueModel& model,
                                  const TrajectorySolveOptions& options) {
  const auto start = Clock::now();
  const double blow_up = 10.0 * ocp.domain().radius();
  TrajectoryResult result;

  // Closed-loop rollout under the model's feedback law.
  const OdeRhs closed_loop = [&](double t, const VectorXd& x) {
    if (x.norm() > blow_up) throw RolloutDivergence{};
    const VectorXd lambda = model.value_gradient(t, x);
    return ocp.dynamics(t, x, ocp.optimal_control(t, x, lambda));
  };

  IvpSolution rollout;
  try {
    rollout = integrate_ivp(closed_loop, 0.0, ocp.final_time(), x0,
                            options.rollout_rel_tol, options.rollout_abs_tol);
  } catch (const RolloutDivergence&) {
    result.failure.reason = "rollout-divergence";
    return result;
  } catch (const std::exception& e) {
    result.failure.reason = std::string("rollout-divergence: ") + e.what();
    return result;
  }

  // Full-interval guess from the rollout and the model's value/gradient.
  const int n = ocp.state_dim();
  const VectorXd mesh =
      uniform_mesh(0.0, ocp.final_time(), options.warm_start_mesh_nodes);
  MatrixXd guess(AugmentedState::dim(n), mesh.size());
  VectorXd grad(n);
  for (Eigen::Index j = 0; j < mesh.size(); ++j) {
    const VectorXd x = rollout.eval(mesh[j]);
    double v;
    model.value_and_gradient(mesh[j], x, v, grad);
    guess.col(j).segment(0, n) = x;
    guess.col(j).segment(n, n) = grad;
    guess(2 * n, j) = v;
  }

  const VectorXd x0_copy = x0;
  const BvpRhs rhs = [&ocp](double t, const VectorXd& z) {
    return augmented_rhs(ocp, t, z);
  };
  const BvpBc bc = [&ocp, &x0_copy](const VectorXd& za, const VectorXd& zb) {
    return terminal_bc_residual(ocp, za, zb, x0_copy);
  };
  BvpOptions bvp_options;
  bvp_options.tol = options.tol;
  bvp_options.max_nodes = options.max_nodes;

  BvpSolution sol = solve_bvp(rhs, bc, mesh, guess, bvp_options);
  if (!sol.converged) {
    result.failure.reason = "bvp-divergence: " + sol.failure_reason;
    result.bvp = std::move(sol);
    return result;
  }
  result.converged = true;
  result.bvp = std::move(sol);
  result.data = sample_trajectory(ocp, result.bvp, x0,
                                  GenerationMethod::kWarmStart,
                                  seconds_since(start));
  return result;
}

TrajectoryResult solve_trajectory(const Ocp& ocp,
                                  const Eigen::Ref<const VectorXd>& x0,
                                  const SolveMethod& method,
                                  const TrajectorySolveOptions& options) {
  if (const auto* march = std::get_if<TimeMarchMethod>(&method)) {
    return time_march_solve(ocp, x0, march->march_times, options);
  }
  const auto& warm = std::get<WarmStartMethod>(method);
  HJBFLOW_REQUIRE(warm.model != nullptr, "warm start requires a model");
  return warm_start_solve(ocp, x0, *warm.model, options);
}

std::vector<TrajectoryResult> solve_trajectory_batch(
    const Ocp& ocp, const std::vector<VectorXd>& initial_states,
    const SolveMethod& method, const TrajectorySolveOptions& options,
    int workers) {
  std::vector<TrajectoryResult> results(initial_states.size());
  parallel_for_indexed(static_cast<int>(initial_states.size()), workers,
                       [&](int i) {
                         results[i] = solve_trajectory(ocp, initial_states[i],
                                                       method, options);
                       });
  return results;
}

GenerationReport generate_uniform_trajectories(const Ocp& ocp, int count,
                                               std::uint64_t seed,
                                               const SolveMethod& method,
                                               const TrajectorySolveOptions& options,
                                               int workers) {
  GenerationReport report;
  Rng rng(seed);
  while (static_cast<int>(report.trajectories.size()) < count) {
    const int missing = count - static_cast<int>(report.trajectories.size());
    const int batch = std::min(std::max(2 * workers, missing), 4 * missing);
    std::vector<VectorXd> ics;
    ics.reserve(batch);
    for (int i = 0; i < batch; ++i) ics.push_back(rng.uniform_in_box(ocp.domain()));
    const auto results = solve_trajectory_batch(ocp, ics, method, options, workers);
    for (const auto& r : results) {
      report.attempts += 1;
      if (r.converged) {
        if (static_cast<int>(report.trajectories.size()) < count) {
          report.trajectories.push_back(r.data);
        }
      } else {
        report.failures += 1;
      }
    }
    if (report.attempts >= 2 * count && 2 * report.failures > report.attempts) {
      throw NumericError("more than half of all BVP attempts diverged (" +
                         std::to_string(report.failures) + "/" +
                         std::to_string(report.attempts) + ")");
    }
  }
  return report;
}

}  // namespace hjbflow
