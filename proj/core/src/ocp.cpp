#include "hjbflow/ocp.hpp"

#include <cmath>

namespace hjbflow {

VectorXd control_affine_optimal_control(const ControlAffineOcp& ocp, double t,
                                        const Eigen::Ref<const VectorXd>& x,
                                        const Eigen::Ref<const VectorXd>& lambda) {
  return ocp.optimal_control(t, x, lambda);
}

double hamiltonian(const Ocp& ocp, double t, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& lambda,
                   const Eigen::Ref<const VectorXd>& u) {
  HJBFLOW_REQUIRE(x.size() == ocp.state_dim(), "state dimension mismatch");
  HJBFLOW_REQUIRE(lambda.size() == ocp.state_dim(), "costate dimension mismatch");
  HJBFLOW_REQUIRE(u.size() == ocp.control_dim(), "control dimension mismatch");
  return ocp.running_cost(t, x, u) + lambda.dot(ocp.dynamics(t, x, u));
}

double minimized_hamiltonian(const Ocp& ocp, double t,
                             const Eigen::Ref<const VectorXd>& x,
                             const Eigen::Ref<const VectorXd>& lambda) {
  const VectorXd u = ocp.optimal_control(t, x, lambda);
  return hamiltonian(ocp, t, x, lambda, u);
}

VectorXd augmented_rhs(const Ocp& ocp, double t, const VectorXd& z) {
  const int n = ocp.state_dim();
  HJBFLOW_REQUIRE(z.size() == AugmentedState::dim(n),
                  "augmented state dimension mismatch");
  const auto x = AugmentedState::state(z, n);
  const auto lambda = AugmentedState::costate(z, n);
  const VectorXd u = ocp.optimal_control(t, x, lambda);

  VectorXd dz(z.size());
  dz.segment(0, n) = ocp.dynamics(t, x, u);
  dz.segment(n, n) = ocp.costate_rhs(t, x, lambda, u);
  dz[2 * n] = -ocp.running_cost(t, x, u);

  for (int i = 0; i < dz.size(); ++i) {
    if (!std::isfinite(dz[i])) {
      throw NumericError("augmented RHS produced a non-finite component", i);
    }
  }
  return dz;
}

VectorXd terminal_bc_residual(const Ocp& ocp, const VectorXd& z0,
                              const VectorXd& zf,
                              const Eigen::Ref<const VectorXd>& x0) {
  const int n = ocp.state_dim();
  VectorXd res(AugmentedState::dim(n));
  const auto xf = AugmentedState::state(zf, n);
  res.segment(0, n) = AugmentedState::state(z0, n) - x0;
  res.segment(n, n) =
      AugmentedState::costate(zf, n) - ocp.terminal_cost_gradient(xf);
  res[2 * n] = AugmentedState::value(zf, n) - ocp.terminal_cost(xf);
  return res;
}

}  // namespace hjbflow
