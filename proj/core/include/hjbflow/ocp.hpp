#ifndef HJBFLOW_OCP_HPP
#define HJBFLOW_OCP_HPP

#include <Eigen/Cholesky>
#include <memory>
#include <string>

#include "hjbflow/common.hpp"

namespace hjbflow {

// A fixed-final-time optimal control problem
//
//   minimize  F(x(t_f)) + \int_0^{t_f} L(t, x, u) dt
//   s.t.      x' = f(t, x, u),  x(0) = x0,
//
// together with the pieces the Pontryagin BVP needs: the costate dynamics
// -H_x and the Hamiltonian-minimizing control map u*(t, x, lambda).
class Ocp {
 public:
  Ocp(int state_dim, int control_dim, double final_time, Box domain,
      std::string name)
      : state_dim_(state_dim),
        control_dim_(control_dim),
        final_time_(final_time),
        domain_(std::move(domain)),
        name_(std::move(name)) {
    HJBFLOW_REQUIRE(state_dim_ > 0 && control_dim_ > 0, "nonpositive dimension");
    HJBFLOW_REQUIRE(final_time_ > 0.0, "nonpositive final time");
    HJBFLOW_REQUIRE(domain_.dim() == state_dim_, "domain/state dimension mismatch");
  }
  virtual ~Ocp() = default;

  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }
  double final_time() const { return final_time_; }
  const Box& domain() const { return domain_; }
  const std::string& name() const { return name_; }

  virtual VectorXd dynamics(double t, const Eigen::Ref<const VectorXd>& x,
                            const Eigen::Ref<const VectorXd>& u) const = 0;
  virtual double running_cost(double t, const Eigen::Ref<const VectorXd>& x,
                              const Eigen::Ref<const VectorXd>& u) const = 0;
  virtual double terminal_cost(const Eigen::Ref<const VectorXd>& x) const = 0;
  virtual VectorXd terminal_cost_gradient(
      const Eigen::Ref<const VectorXd>& x) const = 0;
  // Returns -H_x(t, x, lambda, u); u is the already-minimized control.
  virtual VectorXd costate_rhs(double t, const Eigen::Ref<const VectorXd>& x,
                               const Eigen::Ref<const VectorXd>& lambda,
                               const Eigen::Ref<const VectorXd>& u) const = 0;
  // Hamiltonian minimizer u*(t, x, lambda).
  virtual VectorXd optimal_control(
      double t, const Eigen::Ref<const VectorXd>& x,
      const Eigen::Ref<const VectorXd>& lambda) const = 0;

 private:
  int state_dim_;
  int control_dim_;
  double final_time_;
  Box domain_;
  std::string name_;
};

// Control-affine problem with quadratic control cost:
//
//   x' = drift(t, x) + g(t, x) u,   L = state_cost(t, x) + u^T W u,
//
// for which the Hamiltonian minimizer has the closed form
// u* = -1/2 W^{-1} g(t, x)^T lambda.
class ControlAffineOcp : public Ocp {
 public:
  ControlAffineOcp(int state_dim, int control_dim, double final_time,
                   Box domain, std::string name, MatrixXd control_weight)
      : Ocp(state_dim, control_dim, final_time, std::move(domain),
            std::move(name)),
        control_weight_(std::move(control_weight)) {
    if (control_weight_.rows() != control_dim ||
        control_weight_.cols() != control_dim) {
      throw ConfigurationError("control weight dimension mismatch");
    }
    if (!control_weight_.isApprox(control_weight_.transpose())) {
      throw ConfigurationError("control weight must be symmetric");
    }
    Eigen::LLT<MatrixXd> llt(control_weight_);
    if (llt.info() != Eigen::Success) {
      throw ConfigurationError("control weight must be positive definite");
    }
    half_weight_inverse_ =
        0.5 * llt.solve(MatrixXd::Identity(control_dim, control_dim));
  }

  virtual VectorXd drift(double t, const Eigen::Ref<const VectorXd>& x) const = 0;
  virtual MatrixXd input_matrix(double t,
                                const Eigen::Ref<const VectorXd>& x) const = 0;
  virtual double state_cost(double t,
                            const Eigen::Ref<const VectorXd>& x) const = 0;

  const MatrixXd& control_weight() const { return control_weight_; }

  VectorXd dynamics(double t, const Eigen::Ref<const VectorXd>& x,
                    const Eigen::Ref<const VectorXd>& u) const override {
    return drift(t, x) + input_matrix(t, x) * u;
  }

  double running_cost(double t, const Eigen::Ref<const VectorXd>& x,
                      const Eigen::Ref<const VectorXd>& u) const override {
    return state_cost(t, x) + u.dot(control_weight_ * u);
  }

  VectorXd optimal_control(
      double t, const Eigen::Ref<const VectorXd>& x,
      const Eigen::Ref<const VectorXd>& lambda) const override {
    HJBFLOW_REQUIRE(lambda.size() == state_dim(), "costate dimension mismatch");
    return -(half_weight_inverse_ * (input_matrix(t, x).transpose() * lambda));
  }

 private:
  MatrixXd control_weight_;
  MatrixXd half_weight_inverse_;
};

// u* = -1/2 W^{-1} g^T lambda for an explicitly supplied g and lambda.
// Exposed as a free function so the closed form can be cross-checked against
// problem-specific control laws.
VectorXd control_affine_optimal_control(const ControlAffineOcp& ocp, double t,
                                        const Eigen::Ref<const VectorXd>& x,
                                        const Eigen::Ref<const VectorXd>& lambda);

// H(t, x, lambda, u) = L(t, x, u) + lambda^T f(t, x, u).
double hamiltonian(const Ocp& ocp, double t, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& lambda,
                   const Eigen::Ref<const VectorXd>& u);

// Minimized Hamiltonian H*(t, x, lambda) = H(t, x, lambda, u*(t, x, lambda)).
double minimized_hamiltonian(const Ocp& ocp, double t,
                             const Eigen::Ref<const VectorXd>& x,
                             const Eigen::Ref<const VectorXd>& lambda);

// The augmented state z = [x; lambda; v] of the Pontryagin system, dimension
// 2n + 1. v accumulates the cost-to-go, v' = -L.
struct AugmentedState {
  static int dim(int n) { return 2 * n + 1; }
  static VectorXd pack(const Eigen::Ref<const VectorXd>& x,
                       const Eigen::Ref<const VectorXd>& lambda, double v) {
    HJBFLOW_REQUIRE(x.size() == lambda.size(), "state/costate size mismatch");
    VectorXd z(2 * x.size() + 1);
    z << x, lambda, v;
    return z;
  }
  static Eigen::Ref<const VectorXd> state(const VectorXd& z, int n) {
    return z.segment(0, n);
  }
  static Eigen::Ref<const VectorXd> costate(const VectorXd& z, int n) {
    return z.segment(n, n);
  }
  static double value(const VectorXd& z, int n) { return z[2 * n]; }
};

// Right-hand side of the Pontryagin two-point BVP in augmented form:
// [f(t, x, u*); -H_x(t, x, lambda, u*); -L(t, x, u*)].
VectorXd augmented_rhs(const Ocp& ocp, double t, const VectorXd& z);

// Boundary residual [x(0) - x0; lambda(t_f) - F_x(x(t_f)); v(t_f) - F(x(t_f))].
VectorXd terminal_bc_residual(const Ocp& ocp, const VectorXd& z0,
                              const VectorXd& zf,
                              const Eigen::Ref<const VectorXd>& x0);

}  // namespace hjbflow

#endif  // HJBFLOW_OCP_HPP
