#include "hjbflow/burgers.hpp"

#include <cmath>

namespace hjbflow {

namespace {
Box burgers_domain(int n, double bound) {
  Box box;
  box.lo = VectorXd::Constant(n, -bound);
  box.hi = VectorXd::Constant(n, bound);
  return box;
}
}  // namespace

BurgersProblem::BurgersProblem(int interior_dim, const Params& params)
    : ControlAffineOcp(interior_dim, 1, params.final_time,
                       burgers_domain(interior_dim, params.state_bound),
                       "burgers",
                       0.5 * params.w1 * Eigen::MatrixXd::Identity(1, 1)),
      params_(params) {
  if (interior_dim < 1) throw ConfigurationError("interior dimension must be >= 1");
  const auto ops = chebyshev_operators(interior_dim + 1);
  nodes_ = ops.interior_nodes();
  d1_ = ops.interior_d1();
  d2_ = ops.interior_d2();
  weights_ = ops.interior_weights();

  indicator_.resize(interior_dim);
  for (int j = 0; j < interior_dim; ++j) {
    const bool inside = nodes_[j] > params_.omega_lo && nodes_[j] < params_.omega_hi;
    indicator_[j] = inside ? 1.0 : 0.0;
  }
}

VectorXd BurgersProblem::discretize_profile(
    const std::function<double(double)>& profile) const {
  VectorXd x(nodes_.size());
  for (int j = 0; j < nodes_.size(); ++j) x[j] = profile(nodes_[j]);
  return x;
}

VectorXd BurgersProblem::drift(double /*t*/,
                               const Eigen::Ref<const VectorXd>& x) const {
  HJBFLOW_REQUIRE(x.size() == state_dim(), "state dimension mismatch");
  if (!x.allFinite()) throw NumericError("non-finite state");
  const VectorXd dx = d1_ * x;
  return x.cwiseProduct(dx) + params_.nu * (d2_ * x) +
         params_.alpha * x.cwiseProduct((params_.beta * x).array().exp().matrix());
}

MatrixXd BurgersProblem::input_matrix(
    double /*t*/, const Eigen::Ref<const VectorXd>& /*x*/) const {
  return indicator_;
}

double BurgersProblem::state_cost(double /*t*/,
                                  const Eigen::Ref<const VectorXd>& x) const {
  return 0.5 * quadratic_norm(x);
}

double BurgersProblem::terminal_cost(const Eigen::Ref<const VectorXd>& x) const {
  return 0.5 * params_.w2 * quadratic_norm(x);
}

VectorXd BurgersProblem::terminal_cost_gradient(
    const Eigen::Ref<const VectorXd>& x) const {
  return params_.w2 * weights_.cwiseProduct(x);
}

MatrixXd BurgersProblem::drift_jacobian(
    const Eigen::Ref<const VectorXd>& x) const {
  const VectorXd dx = d1_ * x;
  const VectorXd expbx = (params_.beta * x).array().exp().matrix();
  MatrixXd jac = dx.asDiagonal();
  jac += x.asDiagonal() * d1_;
  jac += params_.nu * d2_;
  const VectorXd reaction =
      params_.alpha * (VectorXd::Ones(x.size()) + params_.beta * x).cwiseProduct(expbx);
  jac += MatrixXd(reaction.asDiagonal());
  return jac;
}

VectorXd BurgersProblem::costate_rhs(double /*t*/,
                                     const Eigen::Ref<const VectorXd>& x,
                                     const Eigen::Ref<const VectorXd>& lambda,
                                     const Eigen::Ref<const VectorXd>& /*u*/) const {
  HJBFLOW_REQUIRE(x.size() == state_dim() && lambda.size() == state_dim(),
                  "dimension mismatch");
  return -(weights_.cwiseProduct(x) + drift_jacobian(x).transpose() * lambda);
}

std::shared_ptr<const BurgersProblem> burgers_ocp(int interior_dim) {
  return std::make_shared<const BurgersProblem>(interior_dim);
}

}  // namespace hjbflow
