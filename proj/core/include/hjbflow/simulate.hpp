#ifndef HJBFLOW_SIMULATE_HPP
#define HJBFLOW_SIMULATE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "hjbflow/ocp.hpp"
#include "hjbflow/trajectory.hpp"
#include "hjbflow/value_net.hpp"

namespace hjbflow {

using Controller = std::function<VectorXd(double t, const VectorXd& x)>;

// Feedback law u = -1/2 W^{-1} g^T V_x^NN evaluated from the model gradient.
// With moving_horizon, the model is always queried at t = 0 (the only option
// for t0-only models, a choice for time-dependent ones).
Controller make_nn_controller(const Ocp& ocp, const MlpValueModel& model,
                              bool moving_horizon = false);
Controller make_zero_controller(const Ocp& ocp);

struct SimOptions {
  double hold_dt = 0.1;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  // Stored trace resolution; even so composite Simpson applies per interval.
  int samples_per_hold = 20;
};

// Zero-order-hold closed-loop run. The controller sees x(t_k) + n(t_k) with
// n ~ N(0, sigma^2 I) at the hold instants only; cost accumulates along the
// true noise-free trajectory.
struct SimResult {
  std::vector<double> times;       // stored trace grid
  MatrixXd states;                 // n x |times|
  std::vector<double> hold_times;  // start of each hold interval
  MatrixXd controls;               // m x |hold_times|, one column per hold
  double cost = 0.0;               // integral of L plus terminal cost
  std::uint64_t noise_seed = 0;
  double terminal_state_norm = 0.0;
  bool diverged = false;

  VectorXd final_state() const { return states.col(states.cols() - 1); }
};

SimResult simulate_closed_loop(const Ocp& ocp, const Controller& controller,
                               const Eigen::Ref<const VectorXd>& x0,
                               const SimOptions& options = {});

// Re-quadrature of the stored trace by composite Simpson per hold interval;
// used to cross-check SimResult::cost.
double recompute_cost(const Ocp& ocp, const SimResult& result);

struct OracleOptions {
  std::vector<double> march_times;          // empty: linear K = 8 sequence
  const MlpValueModel* model = nullptr;     // enables warm start
  TrajectorySolveOptions solver;
};

// Open-loop optimal trajectory for x0; tries warm start first when a model is
// available, then time-marching. Throws NumericError carrying both methods'
// diagnostics when neither converges.
TrajectoryResult solve_optimal_trajectory(const Ocp& ocp,
                                          const Eigen::Ref<const VectorXd>& x0,
                                          const OracleOptions& options = {});

// V(0, x0) = v(0) of the converged Pontryagin trajectory.
double optimal_cost_oracle(const Ocp& ocp, const Eigen::Ref<const VectorXd>& x0,
                           const OracleOptions& options = {});

}  // namespace hjbflow

#endif  // HJBFLOW_SIMULATE_HPP
