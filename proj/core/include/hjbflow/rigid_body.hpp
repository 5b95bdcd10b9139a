#ifndef HJBFLOW_RIGID_BODY_HPP
#define HJBFLOW_RIGID_BODY_HPP

#include <Eigen/Core>

#include "hjbflow/ocp.hpp"

namespace hjbflow {

// Attitude control of a fully actuated rigid-body satellite with momentum
// wheels. State x = [v; omega] with v = (phi, theta, psi) Euler angles and
// omega the body-frame angular velocity:
//
//   v'       = E(v) omega
//   J omega' = S(omega) R(v) h + B u
//
// Quadratic costs L = W1/2 |v|^2 + W2/2 |omega|^2 + W3/2 |u|^2 and
// F = W4/2 |v(t_f)|^2 + W5/2 |omega(t_f)|^2 over t_f = 20.
class RigidBodyProblem : public ControlAffineOcp {
 public:
  struct Params {
    Eigen::Matrix3d inertia;
    Eigen::Matrix3d actuation;
    Eigen::Vector3d momentum;
    double w1 = 1.0;
    double w2 = 10.0;
    double w3 = 0.5;
    double w4 = 1.0;
    double w5 = 1.0;
    double final_time = 20.0;
    double angle_bound = 3.14159265358979323846 / 3.0;  // Euler angles
    double rate_bound = 3.14159265358979323846 / 4.0;   // angular rates

    Params();
  };

  RigidBodyProblem() : RigidBodyProblem(Params{}) {}
  explicit RigidBodyProblem(const Params& params);

  const Params& params() const { return params_; }

  // Euler-rate kinematics matrix; singular at theta = +-pi/2.
  static Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& v);
  // S(omega), skew-symmetric; S(omega) r == r x omega.
  static Eigen::Matrix3d momentum_spin_matrix(const Eigen::Vector3d& omega);
  // Body rotation matrix, orthogonal with det +1.
  static Eigen::Matrix3d rotation_matrix(const Eigen::Vector3d& v);

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

 private:
  void check_gimbal_lock(double theta) const;
  // d/dv of E(v) omega and of R(v) h, hand-derived; both are validated
  // against finite differences in the test suite.
  Eigen::Matrix3d euler_rate_jacobian_v(const Eigen::Vector3d& v,
                                        const Eigen::Vector3d& omega) const;
  Eigen::Matrix3d rotated_momentum_jacobian_v(const Eigen::Vector3d& v) const;

  Params params_;
  Eigen::Matrix3d inertia_inverse_;
  Eigen::Matrix3d inertia_inverse_actuation_;  // J^{-1} B
};

// The problem instance with the constants of the reference benchmark.
std::shared_ptr<const RigidBodyProblem> rigid_body_ocp();

}  // namespace hjbflow

#endif  // HJBFLOW_RIGID_BODY_HPP
