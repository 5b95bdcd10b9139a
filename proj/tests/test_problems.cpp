#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "hjbflow/burgers.hpp"
#include "hjbflow/chebyshev.hpp"
#include "hjbflow/rigid_body.hpp"
#include "hjbflow/rng.hpp"
#include "support/finite_difference.hpp"

using namespace hjbflow;
using hjbflow::testing::central_jacobian;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("rigid-body constants match the benchmark definition") {
  const auto ocp = rigid_body_ocp();
  const auto& p = ocp->params();
  CHECK(p.inertia(0, 0) == 2.0);
  CHECK(p.inertia(1, 1) == 3.0);
  CHECK(p.inertia(2, 2) == 4.0);
  CHECK(p.actuation(0, 1) == 1.0 / 20.0);
  CHECK(p.actuation(1, 0) == 1.0 / 15.0);
  CHECK(p.actuation(2, 2) == 1.0);
  CHECK(p.momentum == Eigen::Vector3d::Ones());
  CHECK(p.w3 == 0.5);
  CHECK(ocp->final_time() == 20.0);
  CHECK(ocp->domain().hi[0] == doctest::Approx(kPi / 3.0));
  CHECK(ocp->domain().hi[3] == doctest::Approx(kPi / 4.0));
}

TEST_CASE("S is skew-symmetric and R is a proper rotation") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::Vector3d v, w;
    for (int i = 0; i < 3; ++i) {
      v[i] = rng.uniform(-kPi / 3.0, kPi / 3.0);
      w[i] = rng.uniform(-kPi / 4.0, kPi / 4.0);
    }
    const Eigen::Matrix3d s = RigidBodyProblem::momentum_spin_matrix(w);
    CHECK((s + s.transpose()).norm() == 0.0);

    const Eigen::Matrix3d r = RigidBodyProblem::rotation_matrix(v);
    CHECK((r * r.transpose() - Eigen::Matrix3d::Identity())
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rigid-body dynamics at the origin and for E(0) = I") {
  const auto ocp = rigid_body_ocp();
  const VectorXd zero_u = VectorXd::Zero(3);
  CHECK(ocp->dynamics(0.0, VectorXd::Zero(6), zero_u).norm() ==
        doctest::Approx(0.0));

  VectorXd x = VectorXd::Zero(6);
  x[3] = 1.0;  // omega = (1, 0, 0), attitude zero
  const VectorXd dx = ocp->dynamics(0.0, x, zero_u);
  CHECK(dx[0] == doctest::Approx(1.0));
  CHECK(dx[1] == doctest::Approx(0.0));
  CHECK(dx[2] == doctest::Approx(0.0));
}

TEST_CASE("rigid-body dynamics match a duplicate matrix-product implementation") {
  const auto ocp = rigid_body_ocp();
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd x = rng.uniform_in_box(ocp->domain());
    VectorXd u(3);
    for (int i = 0; i < 3; ++i) u[i] = rng.uniform(-2.0, 2.0);

    const double phi = x[0], theta = x[1], psi = x[2];
    Eigen::Matrix3d e;
    e << 1, std::sin(phi) * std::tan(theta), std::cos(phi) * std::tan(theta),
        0, std::cos(phi), -std::sin(phi),                               //
        0, std::sin(phi) / std::cos(theta), std::cos(phi) / std::cos(theta);
    Eigen::Matrix3d r;
    r << std::cos(theta) * std::cos(psi), std::cos(theta) * std::sin(psi),
        -std::sin(theta),
        std::sin(phi) * std::sin(theta) * std::cos(psi) -
            std::cos(phi) * std::sin(psi),
        std::sin(phi) * std::sin(theta) * std::sin(psi) +
            std::cos(phi) * std::cos(psi),
        std::cos(theta) * std::sin(phi),
        std::cos(phi) * std::sin(theta) * std::cos(psi) +
            std::sin(phi) * std::sin(psi),
        std::cos(phi) * std::sin(theta) * std::sin(psi) -
            std::sin(phi) * std::cos(psi),
        std::cos(theta) * std::cos(phi);
    const Eigen::Vector3d w = x.tail<3>();
    Eigen::Matrix3d s;
    s << 0, w[2], -w[1], -w[2], 0, w[0], w[1], -w[0], 0;

    VectorXd expected(6);
    expected.head<3>() = e * w;
    expected.tail<3>() =
        ocp->params().inertia.inverse() *
        (s * (r * ocp->params().momentum) + ocp->params().actuation * u);
    const VectorXd got = ocp->dynamics(0.0, x, u);
    CHECK((got - expected).norm() <= 1e-12 * std::max(1.0, expected.norm()));
  }
}

TEST_CASE("rigid-body dynamics reject gimbal-lock proximity") {
  const auto ocp = rigid_body_ocp();
  VectorXd x = VectorXd::Zero(6);
  x[1] = kPi / 2.0 - 1e-9;
  CHECK_THROWS_AS(ocp->dynamics(0.0, x, VectorXd::Zero(3)), std::domain_error);
}

TEST_CASE("rigid-body terminal gradient and control map vanish at zero") {
  const auto ocp = rigid_body_ocp();
  CHECK(ocp->terminal_cost_gradient(VectorXd::Zero(6)).norm() == 0.0);
  CHECK(ocp->optimal_control(0.0, VectorXd::Ones(6), VectorXd::Zero(6)).norm() ==
        0.0);
}

TEST_CASE("rigid-body costate Jacobian blocks match finite differences") {
  const auto ocp = rigid_body_ocp();
  Rng rng(19);
  for (int trial = 0; trial < 25; ++trial) {
    const VectorXd x = rng.uniform_in_box(ocp->domain());
    VectorXd lam(6), u(3);
    for (int i = 0; i < 6; ++i) lam[i] = rng.uniform(-2.0, 2.0);
    for (int i = 0; i < 3; ++i) u[i] = rng.uniform(-1.0, 1.0);

    const MatrixXd jac = central_jacobian(
        [&](const VectorXd& xx) { return ocp->dynamics(0.0, xx, u); }, x, 1e-6);
    VectorXd running_grad(6);
    running_grad << ocp->params().w1 * x.head<3>(),
        ocp->params().w2 * x.tail<3>();
    const VectorXd expected = -(running_grad + jac.transpose() * lam);
    const VectorXd got = ocp->costate_rhs(0.0, x, lam, u);
    CHECK(hjbflow::testing::relative_error(got, expected) < 1e-5);
  }
}

TEST_CASE("chebyshev operators differentiate and integrate polynomials exactly") {
  const auto ops = chebyshev_operators(4);
  REQUIRE(ops.nodes.size() == 5);

  // p(xi) = xi^2 has derivative 2 xi at every node.
  const VectorXd p = ops.nodes.array().square().matrix();
  const VectorXd dp = ops.d1 * p;
  CHECK((dp - 2.0 * ops.nodes).cwiseAbs().maxCoeff() <= 1e-12);

  // Clenshaw-Curtis integrates xi^2 to 2/3 and the constant 1 to 2.
  CHECK(ops.weights.dot(p) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(ops.weights.sum() == doctest::Approx(2.0).epsilon(1e-12));

  // Row sums of D vanish (derivative of a constant).
  CHECK((ops.d1 * VectorXd::Ones(5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("interior differentiation handles polynomials vanishing at the ends") {
  const int n_c = 16;
  const auto ops = chebyshev_operators(n_c);
  const VectorXd xi = ops.interior_nodes();
  // p(xi) = (1 - xi^2) xi vanishes at +-1; p'(xi) = 1 - 3 xi^2.
  const VectorXd p = ((1.0 - xi.array().square()) * xi.array()).matrix();
  const VectorXd dp_expected = (1.0 - 3.0 * xi.array().square()).matrix();
  const VectorXd dp = ops.interior_d1() * p;
  CHECK((dp - dp_expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("chebyshev nodes are strictly decreasing and interior") {
  const auto ops = chebyshev_operators(11);
  const VectorXd xi = ops.interior_nodes();
  for (int j = 0; j + 1 < xi.size(); ++j) CHECK(xi[j] > xi[j + 1]);
  CHECK(xi[0] < 1.0);
  CHECK(xi[xi.size() - 1] > -1.0);
  CHECK(ops.interior_weights().minCoeff() > 0.0);
  CHECK_THROWS_AS(chebyshev_operators(1), ConfigurationError);
}

TEST_CASE("burgers indicator marks nodes inside (-0.5, -0.2)") {
  const auto ocp = burgers_ocp(30);
  const VectorXd& xi = ocp->interior_nodes();
  const VectorXd& ind = ocp->control_indicator();
  for (int j = 0; j < xi.size(); ++j) {
    const bool inside = xi[j] > -0.5 && xi[j] < -0.2;
    CHECK(ind[j] == (inside ? 1.0 : 0.0));
  }
  CHECK(ind.sum() > 0.0);
}

TEST_CASE("burgers RHS at zero state") {
  const auto ocp = burgers_ocp(10);
  VectorXd u0(1), u1(1);
  u0 << 0.0;
  u1 << 1.0;
  CHECK(ocp->dynamics(0.0, VectorXd::Zero(10), u0).norm() == 0.0);
  CHECK((ocp->dynamics(0.0, VectorXd::Zero(10), u1) - ocp->control_indicator())
            .norm() == 0.0);
}

TEST_CASE("burgers linearization at the origin is unstable for n = 30") {
  const auto ocp = burgers_ocp(30);
  const MatrixXd jac = ocp->drift_jacobian(VectorXd::Zero(30));
  const Eigen::EigenSolver<MatrixXd> eig(jac);
  CHECK(eig.eigenvalues().real().maxCoeff() > 0.0);
}

TEST_CASE("burgers drift Jacobian matches finite differences for n in {4, 10}") {
  for (int n : {4, 10}) {
    const auto ocp = burgers_ocp(n);
    Rng rng(41 + n);
    for (int trial = 0; trial < 10; ++trial) {
      VectorXd x(n);
      for (int i = 0; i < n; ++i) x[i] = rng.uniform(-2.0, 2.0);
      const MatrixXd got = ocp->drift_jacobian(x);
      const MatrixXd fd = central_jacobian(
          [&](const VectorXd& xx) { return ocp->drift(0.0, xx); }, x, 1e-6);
      CHECK((got - fd).norm() / fd.norm() < 1e-5);
    }
  }
}

TEST_CASE("burgers quadrature is positive definite on profiles") {
  const auto ocp = burgers_ocp(12);
  CHECK(ocp->quadratic_norm(VectorXd::Zero(12)) == 0.0);
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd x(12);
    for (int i = 0; i < 12; ++i) x[i] = rng.uniform(-2.0, 2.0);
    if (x.norm() == 0.0) continue;
    CHECK(ocp->quadratic_norm(x) > 0.0);
  }
}

TEST_CASE("burgers terminal gradient is W2 w .* x") {
  const auto ocp = burgers_ocp(8);
  CHECK(ocp->terminal_cost_gradient(VectorXd::Zero(8)).norm() == 0.0);
  VectorXd x(8);
  x.setLinSpaced(8, -1.0, 1.0);
  const VectorXd expected =
      ocp->params().w2 * ocp->quadrature_weights().cwiseProduct(x);
  CHECK((ocp->terminal_cost_gradient(x) - expected).norm() <= 1e-15);
}

TEST_CASE("burgers sine profile discretization matches the node values") {
  const auto ocp = burgers_ocp(30);
  const VectorXd x = ocp->discretize_profile(
      [](double xi) { return 2.0 * std::sin(kPi * xi); });
  for (int j = 0; j < 30; ++j) {
    CHECK(x[j] ==
          doctest::Approx(2.0 * std::sin(kPi * ocp->interior_nodes()[j])));
  }
}
