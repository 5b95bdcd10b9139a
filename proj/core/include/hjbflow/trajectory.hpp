#ifndef HJBFLOW_TRAJECTORY_HPP
#define HJBFLOW_TRAJECTORY_HPP

#include <variant>
#include <vector>

#include "hjbflow/bvp.hpp"
#include "hjbflow/ivp.hpp"
#include "hjbflow/ocp.hpp"
#include "hjbflow/trajectory_data.hpp"
#include "hjbflow/value_net.hpp"

namespace hjbflow {

struct TrajectorySolveOptions {
  double tol = 1e-5;
  int max_nodes = 5000;
  // Stage meshes for time-marching start from the bare interval; residual
  // refinement grows them as needed. Cold full-interval attempts (K = 1)
  // genuinely fail this way, reproducing the reference behavior, while short
  // first stages converge and seed the continuation.
  int march_initial_mesh_nodes = 2;
  // The warm-start guess samples the closed-loop rollout on this many nodes.
  int warm_start_mesh_nodes = 33;
  double rollout_rel_tol = 1e-4;
  double rollout_abs_tol = 1e-6;
};

struct TrajectoryFailure {
  std::string reason;
  // 1-based index of the failing continuation stage; -1 outside time-marching.
  int failed_stage = -1;
};

struct TrajectoryResult {
  bool converged = false;
  TrajectoryData data;        // valid when converged
  TrajectoryFailure failure;  // valid when !converged
  BvpSolution bvp;            // final BVP solve (interpolant + diagnostics)
};

// Constant initial guess x(t) = x0, lambda(t) = F_x(x0), v(t) = F(x0).
MatrixXd cold_guess(const Ocp& ocp, const Eigen::Ref<const VectorXd>& x0,
                    const VectorXd& mesh);

// Evenly spaced continuation times t_k = (k/K) t_f, k = 1..K.
std::vector<double> linear_march_times(double final_time, int stages);

// Continuation over a growing sequence of horizons: solve on [0, t_1] from
// the cold guess, then stretch each converged solution onto [0, t_{k+1}] as
// the next initial guess until t_K = t_f.
TrajectoryResult time_march_solve(const Ocp& ocp,
                                  const Eigen::Ref<const VectorXd>& x0,
                                  const std::vector<double>& march_times,
                                  const TrajectorySolveOptions& options = {});

// Closed-loop rollout under the model's feedback control provides the state
// guess; the model's value and gradient along it provide v and lambda. One
// full-interval BVP solve follows. Failure reasons: "rollout-divergence" when
// the rollout leaves 10x the domain radius (or the integrator fails),
// "bvp-divergence" when the solver does not converge.
TrajectoryResult warm_start_solve(const Ocp& ocp,
                                  const Eigen::Ref<const VectorXd>& x0,
                                  const MlpValueModel& model,
                                  const TrajectorySolveOptions& options = {});

struct TimeMarchMethod {
  std::vector<double> march_times;
};
struct WarmStartMethod {
  const MlpValueModel* model = nullptr;
};
using SolveMethod = std::variant<TimeMarchMethod, WarmStartMethod>;

TrajectoryResult solve_trajectory(const Ocp& ocp,
                                  const Eigen::Ref<const VectorXd>& x0,
                                  const SolveMethod& method,
                                  const TrajectorySolveOptions& options = {});

// Runs one job per initial condition across `workers` threads; results come
// back indexed by job, independent of scheduling order.
std::vector<TrajectoryResult> solve_trajectory_batch(
    const Ocp& ocp, const std::vector<VectorXd>& initial_states,
    const SolveMethod& method, const TrajectorySolveOptions& options = {},
    int workers = 1);

struct GenerationReport {
  std::vector<TrajectoryData> trajectories;
  int attempts = 0;
  int failures = 0;
};

// Solves BVPs from uniformly drawn initial conditions until `count` converged
// trajectories exist; failed solves are discarded and replaced with fresh
// draws. Throws NumericError when more than half of all attempts diverge.
GenerationReport generate_uniform_trajectories(
    const Ocp& ocp, int count, std::uint64_t seed, const SolveMethod& method,
    const TrajectorySolveOptions& options = {}, int workers = 1);

}  // namespace hjbflow

#endif  // HJBFLOW_TRAJECTORY_HPP
