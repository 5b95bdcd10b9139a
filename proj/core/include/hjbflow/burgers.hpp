#ifndef HJBFLOW_BURGERS_HPP
#define HJBFLOW_BURGERS_HPP

#include <functional>
#include <memory>

#include "hjbflow/chebyshev.hpp"
#include "hjbflow/ocp.hpp"

namespace hjbflow {

// Chebyshev-collocated Burgers'-type system with Dirichlet boundaries and a
// destabilizing reaction term,
//
//   x' = x (.) Dx + nu D2 x + alpha x (.) exp(beta x) + I_Omega u,
//
// collocated at the n interior nodes of an (n+2)-point Chebyshev grid.
// Scalar control actuated on Omega = (-0.5, -0.2); quadratic costs evaluated
// by Clenshaw-Curtis quadrature:
//
//   L = 1/2 (w^T x^2 + W1 u^2),   F = W2/2 w^T x(t_f)^2,   t_f = 8.
class BurgersProblem : public ControlAffineOcp {
 public:
  struct Params {
    double nu = 0.2;
    double alpha = 1.5;
    double beta = -0.1;
    double omega_lo = -0.5;
    double omega_hi = -0.2;
    double w1 = 0.1;
    double w2 = 1.0;
    double final_time = 8.0;
    double state_bound = 2.0;
  };

  explicit BurgersProblem(int interior_dim) : BurgersProblem(interior_dim, Params{}) {}
  BurgersProblem(int interior_dim, const Params& params);

  const Params& params() const { return params_; }
  const VectorXd& interior_nodes() const { return nodes_; }
  const MatrixXd& d1() const { return d1_; }
  const MatrixXd& d2() const { return d2_; }
  const VectorXd& quadrature_weights() const { return weights_; }
  const VectorXd& control_indicator() const { return indicator_; }

  // w^T x^2, the discretized squared L2 norm of the profile.
  double quadratic_norm(const Eigen::Ref<const VectorXd>& x) const {
    return weights_.dot(x.cwiseProduct(x));
  }

  // Samples a profile X(0, xi) at the interior collocation nodes.
  VectorXd discretize_profile(const std::function<double(double)>& profile) const;

  VectorXd drift(double t, const Eigen::Ref<const VectorXd>& x) const override;
  MatrixXd input_matrix(double t,
                        const Eigen::Ref<const VectorXd>& x) const override;
  double state_cost(double t,
                    const Eigen::Ref<const VectorXd>& x) const override;
  double terminal_cost(const Eigen::Ref<const VectorXd>& x) const override;
  VectorXd terminal_cost_gradient(
      const Eigen::Ref<const VectorXd>& x) const override;
  VectorXd costate_rhs(double t, const Eigen::Ref<const VectorXd>& x,
                       const Eigen::Ref<const VectorXd>& lambda,
                       const Eigen::Ref<const VectorXd>& u) const override;

  // Jacobian of the uncontrolled drift; the origin's instability is checked
  // through its spectrum.
  MatrixXd drift_jacobian(const Eigen::Ref<const VectorXd>& x) const;

 private:
  Params params_;
  VectorXd nodes_;
  MatrixXd d1_;
  MatrixXd d2_;
  VectorXd weights_;
  VectorXd indicator_;
};

std::shared_ptr<const BurgersProblem> burgers_ocp(int interior_dim);

}  // namespace hjbflow

#endif  // HJBFLOW_BURGERS_HPP
