#include <cmath>

#include "doctest.h"
#include "hjbflow/bvp.hpp"
#include "hjbflow/ivp.hpp"
#include "hjbflow/ocp.hpp"
#include "hjbflow/rigid_body.hpp"
#include "hjbflow/rng.hpp"
#include "hjbflow/trajectory.hpp"
#include "support/lq_problem.hpp"

using namespace hjbflow;
using hjbflow::testing::ScalarLqProblem;

namespace {
constexpr double kPi = 3.14159265358979323846;

VectorXd uniform_mesh(double t0, double t1, int nodes) {
  VectorXd mesh(nodes);
  mesh.setLinSpaced(nodes, t0, t1);
  return mesh;
}
}  // namespace

TEST_CASE("integrate_ivp reproduces exponential decay") {
  const OdeRhs rhs = [](double, const VectorXd& y) { return (-y).eval(); };
  const auto sol = integrate_ivp(rhs, 0.0, 1.0, VectorXd::Ones(1), 1e-10, 1e-12);
  CHECK(sol.final_state()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  // Dense output at stored nodes returns the stored states.
  const auto& times = sol.times();
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(sol.eval(times[i])[0] == sol.states()[i][0]);
  }
  // Dense output between nodes tracks the closed form.
  for (double t = 0.05; t < 1.0; t += 0.1) {
    CHECK(sol.eval(t)[0] == doctest::Approx(std::exp(-t)).epsilon(1e-8));
  }
}

TEST_CASE("integrate_ivp keeps the rigid body at its equilibrium") {
  const auto ocp = rigid_body_ocp();
  const VectorXd u = VectorXd::Zero(3);
  const OdeRhs rhs = [&](double t, const VectorXd& x) {
    return ocp->dynamics(t, x, u);
  };
  const auto sol = integrate_ivp(rhs, 0.0, 20.0, VectorXd::Zero(6));
  CHECK(sol.final_state().norm() == doctest::Approx(0.0));
}

TEST_CASE("integrate_ivp holds oscillator energy over 100 periods") {
  const OdeRhs rhs = [](double, const VectorXd& y) {
    VectorXd dy(2);
    dy << y[1], -y[0];
    return dy;
  };
  VectorXd y0(2);
  y0 << 1.0, 0.0;
  const double t_end = 100.0 * 2.0 * kPi;
  const auto sol = integrate_ivp(rhs, 0.0, t_end, y0, 1e-8, 1e-10);
  const double energy0 = 0.5;
  const double energy = 0.5 * sol.final_state().squaredNorm();
  CHECK(std::abs(energy - energy0) <= 1e-4);
}

TEST_CASE("integrate_ivp supports backward spans") {
  const OdeRhs rhs = [](double, const VectorXd& y) { return y.eval(); };
  const auto sol = integrate_ivp(rhs, 1.0, 0.0, VectorXd::Ones(1), 1e-10, 1e-12);
  CHECK(sol.final_state()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
  CHECK(sol.eval(0.5)[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-7));
}

TEST_CASE("solve_bvp solves the linear benchmark y'' = -y") {
  // y(0) = 0, y(pi/2) = 1 has the solution sin(t).
  const BvpRhs rhs = [](double, const VectorXd& y) {
    VectorXd dy(2);
    dy << y[1], -y[0];
    return dy;
  };
  const BvpBc bc = [](const VectorXd& ya, const VectorXd& yb) {
    VectorXd r(2);
    r << ya[0], yb[0] - 1.0;
    return r;
  };
  const double tol = 1e-6;
  BvpOptions options;
  options.tol = tol;
  const VectorXd mesh = uniform_mesh(0.0, kPi / 2.0, 9);
  const auto sol = solve_bvp(rhs, bc, mesh, MatrixXd::Zero(2, 9), options);
  REQUIRE(sol.converged);
  double max_err = 0.0;
  for (double t = 0.0; t <= kPi / 2.0; t += 0.01) {
    max_err = std::max(max_err, std::abs(sol.eval(t)[0] - std::sin(t)));
  }
  CHECK(max_err <= tol * 10.0);
}

TEST_CASE("solve_bvp shows fourth-order convergence on a fixed mesh") {
  const BvpRhs rhs = [](double, const VectorXd& y) {
    VectorXd dy(2);
    dy << y[1], -y[0];
    return dy;
  };
  const BvpBc bc = [](const VectorXd& ya, const VectorXd& yb) {
    VectorXd r(2);
    r << ya[0], yb[0] - 1.0;
    return r;
  };
  BvpOptions options;
  options.allow_refinement = false;
  options.tol = 1e-3;  // fixed mesh; only Newton needs to converge

  auto max_error = [&](int nodes) {
    const VectorXd mesh = uniform_mesh(0.0, kPi / 2.0, nodes);
    const auto sol = solve_bvp(rhs, bc, mesh, MatrixXd::Zero(2, nodes), options);
    REQUIRE(sol.converged);
    double err = 0.0;
    for (Eigen::Index i = 0; i < mesh.size(); ++i) {
      err = std::max(err, std::abs(sol.states(0, i) - std::sin(mesh[i])));
    }
    return err;
  };
  const double coarse = max_error(9);
  const double fine = max_error(17);
  const double order = std::log2(coarse / fine);
  CHECK(order >= 3.5);
}

TEST_CASE("solve_bvp matches the scalar LQ Riccati value") {
  ScalarLqProblem lq;
  VectorXd x0(1);
  x0 << 1.0;
  const BvpRhs rhs = [&](double t, const VectorXd& z) {
    return augmented_rhs(lq, t, z);
  };
  const BvpBc bc = [&](const VectorXd& za, const VectorXd& zb) {
    return terminal_bc_residual(lq, za, zb, x0);
  };
  const VectorXd mesh = uniform_mesh(0.0, 1.0, 33);
  const auto sol = solve_bvp(rhs, bc, mesh, cold_guess(lq, x0, mesh));
  REQUIRE(sol.converged);
  const double v0 = sol.states(2, 0);
  CHECK(std::abs(v0 - 0.5 * std::tanh(1.0)) <= 1e-6);
  CHECK(std::abs(sol.states(1, 0) - std::tanh(1.0)) <= 1e-6);
}

TEST_CASE("solve_bvp reports divergence instead of throwing") {
  // Gimbal-lock evaluations inside Newton must surface as converged = false.
  const auto ocp = rigid_body_ocp();
  const double a = 3.14159265358979323846 / 3.0;
  const double w = 3.14159265358979323846 / 4.0;
  VectorXd x0(6);
  x0 << a, a, a, w, w, w;  // domain corner, diverges on a cold full-interval try
  const BvpRhs rhs = [&](double t, const VectorXd& z) {
    return augmented_rhs(*ocp, t, z);
  };
  const BvpBc bc = [&](const VectorXd& za, const VectorXd& zb) {
    return terminal_bc_residual(*ocp, za, zb, x0);
  };
  const VectorXd mesh = uniform_mesh(0.0, 20.0, 33);
  BvpOptions options;
  options.max_nodes = 600;
  const auto sol = solve_bvp(rhs, bc, mesh, cold_guess(*ocp, x0, mesh), options);
  CHECK_FALSE(sol.converged);
  CHECK_FALSE(sol.failure_reason.empty());
}

TEST_CASE("solve_bvp validates its mesh and guess") {
  const BvpRhs rhs = [](double, const VectorXd& y) { return y.eval(); };
  const BvpBc bc = [](const VectorXd& ya, const VectorXd&) { return ya.eval(); };
  VectorXd bad_mesh(3);
  bad_mesh << 0.0, 0.5, 0.4;
  CHECK_THROWS_AS(solve_bvp(rhs, bc, bad_mesh, MatrixXd::Zero(1, 3)),
                  ContractViolation);
  CHECK_THROWS_AS(
      solve_bvp(rhs, bc, uniform_mesh(0.0, 1.0, 3), MatrixXd::Zero(1, 2)),
      ContractViolation);
}

TEST_CASE("cold guess replicates the initial condition data") {
  const auto ocp = rigid_body_ocp();
  const VectorXd mesh = uniform_mesh(0.0, 5.0, 7);
  CHECK(cold_guess(*ocp, VectorXd::Zero(6), mesh).norm() == 0.0);

  Rng rng(3);
  const VectorXd x0 = rng.uniform_in_box(ocp->domain());
  const MatrixXd guess = cold_guess(*ocp, x0, mesh);
  // Rows 1..n of the boundary residual vanish by construction.
  const VectorXd res =
      terminal_bc_residual(*ocp, guess.col(0), guess.col(6), x0);
  CHECK(res.head(6).norm() == 0.0);
}

TEST_CASE("time-march solves the scalar LQ problem from a cold guess") {
  ScalarLqProblem lq;
  for (double x0 : {0.5, 1.0, 2.0}) {
    VectorXd start(1);
    start << x0;
    const auto result = time_march_solve(lq, start, {0.2, 1.0});
    REQUIRE(result.converged);
    const double expected = 0.5 * std::tanh(1.0) * x0 * x0;
    CHECK(std::abs(result.data.value_at_start() - expected) / expected <= 1e-6);
    CHECK(result.data.method == GenerationMethod::kTimeMarch);
  }
}

TEST_CASE("converged trajectories satisfy the structural invariants") {
  const auto ocp = rigid_body_ocp();
  Rng rng(101);
  int converged = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const VectorXd x0 = rng.uniform_in_box(ocp->domain());
    const auto result =
        time_march_solve(*ocp, x0, linear_march_times(ocp->final_time(), 8));
    if (!result.converged) continue;
    converged += 1;
    const auto& data = result.data;

    // v nonincreasing along the trajectory.
    for (int k = 0; k + 1 < data.sample_count(); ++k) {
      CHECK(data.values[k + 1] <= data.values[k] + 1e-9 * (1.0 + data.values[0]));
    }
    // lambda(t_f) = F_x(x(t_f)) within tolerance.
    const VectorXd xf = data.states.col(data.sample_count() - 1);
    const VectorXd lam_f = data.costates.col(data.sample_count() - 1);
    CHECK((lam_f - ocp->terminal_cost_gradient(xf)).norm() <= 1e-4);
    // v(t_f) = F(x(t_f)).
    CHECK(data.values[data.sample_count() - 1] ==
          doctest::Approx(ocp->terminal_cost(xf)).epsilon(1e-4));

    // The minimized Hamiltonian is a first integral of the autonomous system.
    double h0 = 0.0, drift = 0.0;
    for (int k = 0; k < data.sample_count(); ++k) {
      const double h = minimized_hamiltonian(*ocp, data.times[k],
                                             data.states.col(k),
                                             data.costates.col(k));
      if (k == 0) {
        h0 = h;
      } else {
        drift = std::max(drift, std::abs(h - h0));
      }
    }
    CHECK(drift / std::max(1.0, std::abs(h0)) <= 10.0 * 1e-5);
  }
  CHECK(converged >= 4);  // uniform draws are mostly easy cases
}

TEST_CASE("warm start converges immediately with a perfect costate oracle") {
  // Hand the solver the closed-form Riccati prediction instead of a model:
  // rollout under u = -lambda and lambda = P(t) x is the exact solution, so
  // the BVP collocates in very few Newton steps.
  ScalarLqProblem lq;
  VectorXd x0(1);
  x0 << 1.5;
  const VectorXd mesh = uniform_mesh(0.0, 1.0, 33);
  MatrixXd guess(3, mesh.size());
  for (Eigen::Index j = 0; j < mesh.size(); ++j) {
    guess(0, j) = ScalarLqProblem::optimal_state(mesh[j], x0[0]);
    guess(1, j) = ScalarLqProblem::optimal_costate(mesh[j], x0[0]);
    guess(2, j) = ScalarLqProblem::cost_to_go(mesh[j], x0[0]);
  }
  const BvpRhs rhs = [&](double t, const VectorXd& z) {
    return augmented_rhs(lq, t, z);
  };
  const BvpBc bc = [&](const VectorXd& za, const VectorXd& zb) {
    return terminal_bc_residual(lq, za, zb, x0);
  };
  const auto sol = solve_bvp(rhs, bc, mesh, guess);
  REQUIRE(sol.converged);
  CHECK(sol.newton_iterations <= 3);
}

TEST_CASE("trajectory batch preserves job order and tags failures") {
  const auto ocp = rigid_body_ocp();
  std::vector<VectorXd> ics;
  Rng rng(55);
  for (int i = 0; i < 4; ++i) {
    ics.push_back(0.25 * rng.uniform_in_box(ocp->domain()));
  }
  const auto results = solve_trajectory_batch(
      *ocp, ics, TimeMarchMethod{linear_march_times(ocp->final_time(), 8)}, {},
      2);
  REQUIRE(results.size() == 4);
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].converged) {
      CHECK((results[i].data.initial_state - ics[i]).norm() == 0.0);
    } else {
      CHECK_FALSE(results[i].failure.reason.empty());
    }
  }
}

TEST_CASE("time-march validates its continuation sequence") {
  ScalarLqProblem lq;
  VectorXd x0(1);
  x0 << 1.0;
  CHECK_THROWS_AS(time_march_solve(lq, x0, {0.5, 0.4, 1.0}), ContractViolation);
  CHECK_THROWS_AS(time_march_solve(lq, x0, {0.5}), ContractViolation);
}
