#include "hjbflow/simulate.hpp"

#include <cmath>

#include "hjbflow/rng.hpp"

namespace hjbflow {

Controller make_nn_controller(const Ocp& ocp, const MlpValueModel& model,
                              bool moving_horizon) {
  return [&ocp, &model, moving_horizon](double t, const VectorXd& x) {
    const double t_eval = moving_horizon ? 0.0 : t;
    return ocp.optimal_control(t_eval, x, model.value_gradient(t_eval, x));
  };
}

Controller make_zero_controller(const Ocp& ocp) {
  const int m = ocp.control_dim();
  return [m](double, const VectorXd&) { return VectorXd::Zero(m).eval(); };
}

SimResult simulate_closed_loop(const Ocp& ocp, const Controller& controller,
                               const Eigen::Ref<const VectorXd>& x0,
                               const SimOptions& options) {
  HJBFLOW_REQUIRE(options.hold_dt > 0.0, "hold interval must be positive");
  const int n = ocp.state_dim();
  const double t_f = ocp.final_time();
  const double blow_up = 10.0 * ocp.domain().radius();

  SimResult result;
  result.noise_seed = options.noise_seed;
  Rng noise(options.noise_seed);

  std::vector<double> trace_times;
  std::vector<VectorXd> trace_states;
  std::vector<double> hold_times;
  std::vector<VectorXd> controls;

  trace_times.push_back(0.0);
  trace_states.push_back(x0);

  VectorXd x = x0;
  double accumulated = 0.0;
  double t = 0.0;
  while (t < t_f - 1e-12 * (1.0 + t_f)) {
    const double t_next = std::min(t + options.hold_dt, t_f);

    VectorXd measured = x;
    if (options.noise_sigma > 0.0) {
      measured += noise.normal_vector(n, options.noise_sigma);
    }
    const VectorXd u = controller(t, measured);
    hold_times.push_back(t);
    controls.push_back(u);

    // Plant plus running-cost accumulator under the held control.
    const OdeRhs plant = [&](double tau, const VectorXd& aug) {
      const VectorXd state = aug.head(n);
      VectorXd out(n + 1);
      out.head(n) = ocp.dynamics(tau, state, u);
      out[n] = ocp.running_cost(tau, state, u);
      return out;
    };
    VectorXd aug(n + 1);
    aug.head(n) = x;
    aug[n] = accumulated;

    IvpSolution leg;
    try {
      leg = integrate_ivp(plant, t, t_next, aug, options.rel_tol,
                          options.abs_tol);
    } catch (const std::exception&) {
      result.diverged = true;
      break;
    }

    for (int s = 1; s <= options.samples_per_hold; ++s) {
      const double ts =
          t + (t_next - t) * static_cast<double>(s) / options.samples_per_hold;
      const VectorXd sample = leg.eval(ts);
      trace_times.push_back(ts);
      trace_states.push_back(sample.head(n));
    }

    x = leg.final_state().head(n);
    accumulated = leg.final_state()[n];
    t = t_next;
    if (x.norm() > blow_up) {
      result.diverged = true;
      break;
    }
  }

  result.times = trace_times;
  result.states.resize(n, static_cast<Eigen::Index>(trace_states.size()));
  for (std::size_t i = 0; i < trace_states.size(); ++i) {
    result.states.col(static_cast<Eigen::Index>(i)) = trace_states[i];
  }
  result.hold_times = hold_times;
  result.controls.resize(ocp.control_dim(),
                         static_cast<Eigen::Index>(controls.size()));
  for (std::size_t i = 0; i < controls.size(); ++i) {
    result.controls.col(static_cast<Eigen::Index>(i)) = controls[i];
  }
  result.terminal_state_norm = x.norm();
  result.cost = accumulated + (result.diverged ? 0.0 : ocp.terminal_cost(x));
  return result;
}

double recompute_cost(const Ocp& ocp, const SimResult& result) {
  HJBFLOW_REQUIRE(!result.hold_times.empty(), "empty simulation result");
  double total = 0.0;
  const int per_hold =
      static_cast<int>((result.times.size() - 1) / result.hold_times.size());
  std::size_t idx = 0;
  for (std::size_t k = 0; k < result.hold_times.size(); ++k) {
    const VectorXd u = result.controls.col(static_cast<Eigen::Index>(k));
    // Composite Simpson over this hold's per_hold subintervals.
    for (int s = 0; s + 2 <= per_hold; s += 2) {
      const double t0 = result.times[idx + s];
      const double t1 = result.times[idx + s + 1];
      const double t2 = result.times[idx + s + 2];
      const double f0 =
          ocp.running_cost(t0, result.states.col(static_cast<Eigen::Index>(idx + s)), u);
      const double f1 = ocp.running_cost(
          t1, result.states.col(static_cast<Eigen::Index>(idx + s + 1)), u);
      const double f2 = ocp.running_cost(
          t2, result.states.col(static_cast<Eigen::Index>(idx + s + 2)), u);
      total += (t2 - t0) / 6.0 * (f0 + 4.0 * f1 + f2);
    }
    idx += per_hold;
  }
  total += ocp.terminal_cost(result.states.col(result.states.cols() - 1));
  return total;
}

TrajectoryResult solve_optimal_trajectory(const Ocp& ocp,
                                          const Eigen::Ref<const VectorXd>& x0,
                                          const OracleOptions& options) {
  std::string warm_reason = "warm start not attempted (no model)";
  if (options.model != nullptr) {
    TrajectoryResult warm = warm_start_solve(ocp, x0, *options.model,
                                             options.solver);
    if (warm.converged) return warm;
    warm_reason = warm.failure.reason;
  }
  const std::vector<double> times = options.march_times.empty()
                                        ? linear_march_times(ocp.final_time(), 8)
                                        : options.march_times;
  TrajectoryResult march = time_march_solve(ocp, x0, times, options.solver);
  if (march.converged) return march;
  throw NumericError("optimal trajectory solve failed; warm start: [" +
                     warm_reason + "]; time-marching: [" +
                     march.failure.reason + "]");
}

double optimal_cost_oracle(const Ocp& ocp, const Eigen::Ref<const VectorXd>& x0,
                           const OracleOptions& options) {
  return solve_optimal_trajectory(ocp, x0, options).data.value_at_start();
}

}  // namespace hjbflow
