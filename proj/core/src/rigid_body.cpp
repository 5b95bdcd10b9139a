#include "hjbflow/rigid_body.hpp"

#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

namespace hjbflow {

namespace {
constexpr double kPi = 3.14159265358979323846;

Box rigid_body_domain(double angle_bound, double rate_bound) {
  Box box;
  box.lo.resize(6);
  box.hi.resize(6);
  box.lo << -angle_bound, -angle_bound, -angle_bound, -rate_bound, -rate_bound,
      -rate_bound;
  box.hi = -box.lo;
  return box;
}
}  // namespace

RigidBodyProblem::Params::Params() {
  inertia = Eigen::Vector3d(2.0, 3.0, 4.0).asDiagonal();
  actuation << 1.0, 1.0 / 20.0, 1.0 / 10.0,  //
      1.0 / 15.0, 1.0, 1.0 / 10.0,           //
      1.0 / 10.0, 1.0 / 15.0, 1.0;
  momentum << 1.0, 1.0, 1.0;
}

RigidBodyProblem::RigidBodyProblem(const Params& params)
    : ControlAffineOcp(6, 3, params.final_time,
                       rigid_body_domain(params.angle_bound, params.rate_bound),
                       "satellite",
                       0.5 * params.w3 * Eigen::Matrix3d::Identity()),
      params_(params) {
  inertia_inverse_ = params_.inertia.inverse();
  inertia_inverse_actuation_ = inertia_inverse_ * params_.actuation;
}

Eigen::Matrix3d RigidBodyProblem::euler_rate_matrix(const Eigen::Vector3d& v) {
  const double sp = std::sin(v[0]), cp = std::cos(v[0]);
  const double st = std::sin(v[1]), ct = std::cos(v[1]);
  const double tt = st / ct;
  Eigen::Matrix3d e;
  e << 1.0, sp * tt, cp * tt,  //
      0.0, cp, -sp,            //
      0.0, sp / ct, cp / ct;
  return e;
}

Eigen::Matrix3d RigidBodyProblem::momentum_spin_matrix(
    const Eigen::Vector3d& omega) {
  Eigen::Matrix3d s;
  s << 0.0, omega[2], -omega[1],  //
      -omega[2], 0.0, omega[0],   //
      omega[1], -omega[0], 0.0;
  return s;
}

Eigen::Matrix3d RigidBodyProblem::rotation_matrix(const Eigen::Vector3d& v) {
  const double sp = std::sin(v[0]), cp = std::cos(v[0]);
  const double st = std::sin(v[1]), ct = std::cos(v[1]);
  const double ss = std::sin(v[2]), cs = std::cos(v[2]);
  Eigen::Matrix3d r;
  r << ct * cs, ct * ss, -st,                                        //
      sp * st * cs - cp * ss, sp * st * ss + cp * cs, ct * sp,       //
      cp * st * cs + sp * ss, cp * st * ss - sp * cs, ct * cp;
  return r;
}

void RigidBodyProblem::check_gimbal_lock(double theta) const {
  if (std::abs(theta) >= 0.5 * kPi - 1e-6) {
    throw std::domain_error("gimbal-lock proximity: |theta| too close to pi/2");
  }
}

VectorXd RigidBodyProblem::drift(double /*t*/,
                                 const Eigen::Ref<const VectorXd>& x) const {
  HJBFLOW_REQUIRE(x.size() == 6, "state dimension mismatch");
  const Eigen::Vector3d v = x.head<3>();
  const Eigen::Vector3d omega = x.tail<3>();
  check_gimbal_lock(v[1]);

  VectorXd dx(6);
  dx.head<3>() = euler_rate_matrix(v) * omega;
  dx.tail<3>() = inertia_inverse_ *
                 (momentum_spin_matrix(omega) * (rotation_matrix(v) * params_.momentum));
  return dx;
}

MatrixXd RigidBodyProblem::input_matrix(
    double /*t*/, const Eigen::Ref<const VectorXd>& /*x*/) const {
  MatrixXd g = MatrixXd::Zero(6, 3);
  g.bottomRows<3>() = inertia_inverse_actuation_;
  return g;
}

double RigidBodyProblem::state_cost(double /*t*/,
                                    const Eigen::Ref<const VectorXd>& x) const {
  return 0.5 * params_.w1 * x.head<3>().squaredNorm() +
         0.5 * params_.w2 * x.tail<3>().squaredNorm();
}

double RigidBodyProblem::terminal_cost(
    const Eigen::Ref<const VectorXd>& x) const {
  return 0.5 * params_.w4 * x.head<3>().squaredNorm() +
         0.5 * params_.w5 * x.tail<3>().squaredNorm();
}

VectorXd RigidBodyProblem::terminal_cost_gradient(
    const Eigen::Ref<const VectorXd>& x) const {
  VectorXd g(6);
  g.head<3>() = params_.w4 * x.head<3>();
  g.tail<3>() = params_.w5 * x.tail<3>();
  return g;
}

Eigen::Matrix3d RigidBodyProblem::euler_rate_jacobian_v(
    const Eigen::Vector3d& v, const Eigen::Vector3d& omega) const {
  const double sp = std::sin(v[0]), cp = std::cos(v[0]);
  const double st = std::sin(v[1]), ct = std::cos(v[1]);
  const double tt = st / ct;
  const double sec = 1.0 / ct;
  const double sec2 = sec * sec;

  // Columns are d(E(v) omega)/dphi, d/dtheta, d/dpsi.
  Eigen::Matrix3d de_dphi;
  de_dphi << 0.0, cp * tt, -sp * tt,  //
      0.0, -sp, -cp,                  //
      0.0, cp * sec, -sp * sec;
  Eigen::Matrix3d de_dtheta;
  de_dtheta << 0.0, sp * sec2, cp * sec2,  //
      0.0, 0.0, 0.0,                       //
      0.0, sp * sec * tt, cp * sec * tt;

  Eigen::Matrix3d jac;
  jac.col(0) = de_dphi * omega;
  jac.col(1) = de_dtheta * omega;
  jac.col(2).setZero();
  return jac;
}

Eigen::Matrix3d RigidBodyProblem::rotated_momentum_jacobian_v(
    const Eigen::Vector3d& v) const {
  const double sp = std::sin(v[0]), cp = std::cos(v[0]);
  const double st = std::sin(v[1]), ct = std::cos(v[1]);
  const double ss = std::sin(v[2]), cs = std::cos(v[2]);

  Eigen::Matrix3d dr_dphi;
  dr_dphi << 0.0, 0.0, 0.0,                                      //
      cp * st * cs + sp * ss, cp * st * ss - sp * cs, ct * cp,   //
      -sp * st * cs + cp * ss, -sp * st * ss - cp * cs, -ct * sp;
  Eigen::Matrix3d dr_dtheta;
  dr_dtheta << -st * cs, -st * ss, -ct,              //
      sp * ct * cs, sp * ct * ss, -st * sp,          //
      cp * ct * cs, cp * ct * ss, -st * cp;
  Eigen::Matrix3d dr_dpsi;
  dr_dpsi << -ct * ss, ct * cs, 0.0,                             //
      -sp * st * ss - cp * cs, sp * st * cs - cp * ss, 0.0,      //
      -cp * st * ss + sp * cs, cp * st * cs + sp * ss, 0.0;

  Eigen::Matrix3d jac;
  jac.col(0) = dr_dphi * params_.momentum;
  jac.col(1) = dr_dtheta * params_.momentum;
  jac.col(2) = dr_dpsi * params_.momentum;
  return jac;
}

VectorXd RigidBodyProblem::costate_rhs(double /*t*/,
                                       const Eigen::Ref<const VectorXd>& x,
                                       const Eigen::Ref<const VectorXd>& lambda,
                                       const Eigen::Ref<const VectorXd>& /*u*/) const {
  HJBFLOW_REQUIRE(x.size() == 6 && lambda.size() == 6, "dimension mismatch");
  const Eigen::Vector3d v = x.head<3>();
  const Eigen::Vector3d omega = x.tail<3>();
  check_gimbal_lock(v[1]);

  const Eigen::Vector3d lambda_v = lambda.head<3>();
  const Eigen::Vector3d lambda_omega = lambda.tail<3>();

  const Eigen::Matrix3d e = euler_rate_matrix(v);
  const Eigen::Matrix3d s = momentum_spin_matrix(omega);
  const Eigen::Vector3d r = rotation_matrix(v) * params_.momentum;

  // Jacobian blocks of f = [E(v) omega; J^{-1} (S(omega) R(v) h + B u)].
  const Eigen::Matrix3d dfv_dv = euler_rate_jacobian_v(v, omega);
  const Eigen::Matrix3d dfw_dv =
      inertia_inverse_ * s * rotated_momentum_jacobian_v(v);
  // S(omega) r == r x omega, so the omega-Jacobian is the cross matrix of r.
  Eigen::Matrix3d cross_r;
  cross_r << 0.0, -r[2], r[1],  //
      r[2], 0.0, -r[0],         //
      -r[1], r[0], 0.0;
  const Eigen::Matrix3d dfw_dw = inertia_inverse_ * cross_r;

  VectorXd rhs(6);
  rhs.head<3>() = -(params_.w1 * v + dfv_dv.transpose() * lambda_v +
                    dfw_dv.transpose() * lambda_omega);
  rhs.tail<3>() = -(params_.w2 * omega + e.transpose() * lambda_v +
                    dfw_dw.transpose() * lambda_omega);
  return rhs;
}

std::shared_ptr<const RigidBodyProblem> rigid_body_ocp() {
  static const auto instance = std::make_shared<const RigidBodyProblem>();
  return instance;
}

}  // namespace hjbflow
