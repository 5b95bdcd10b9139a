#ifndef HJBFLOW_LQR_HPP
#define HJBFLOW_LQR_HPP

#include "hjbflow/ivp.hpp"
#include "hjbflow/ocp.hpp"
#include "hjbflow/simulate.hpp"

namespace hjbflow {

// Finite-horizon LQR about the origin equilibrium: dynamics linearized at
// (x, u) = (0, 0), cost matrices extracted from the quadratic costs, and the
// differential Riccati equation integrated backward from P(t_f) = Q_f.
class LqrBaseline {
 public:
  LqrBaseline(const Ocp& ocp);

  const MatrixXd& state_matrix() const { return a_; }
  const MatrixXd& input_matrix() const { return b_; }
  const MatrixXd& state_cost() const { return q_; }
  const MatrixXd& control_cost() const { return r_; }
  const MatrixXd& terminal_cost() const { return qf_; }

  MatrixXd riccati(double t) const;  // P(t)
  MatrixXd gain(double t) const;     // K(t) = R^{-1} B^T P(t)
  // LQR estimate of the value function, 1/2 x^T P(0) x.
  double value(const Eigen::Ref<const VectorXd>& x) const;

  Controller controller() const;  // u(t, x) = -K(t) x

 private:
  int n_ = 0;
  double final_time_ = 0.0;
  MatrixXd a_, b_, q_, r_, qf_, r_inverse_;
  IvpSolution backward_;  // S(s) = P(t_f - s), flattened column-major
};

LqrBaseline lqr_controller(const Ocp& ocp);

}  // namespace hjbflow

#endif  // HJBFLOW_LQR_HPP
