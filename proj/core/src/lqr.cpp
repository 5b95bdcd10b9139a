#include "hjbflow/lqr.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace hjbflow {

namespace {

// Central-difference linearization of the dynamics at the origin.
void linearize_at_origin(const Ocp& ocp, MatrixXd& a, MatrixXd& b) {
  const int n = ocp.state_dim();
  const int m = ocp.control_dim();
  const double h = 1e-6;
  const VectorXd x0 = VectorXd::Zero(n);
  const VectorXd u0 = VectorXd::Zero(m);

  a.resize(n, n);
  VectorXd xp = x0, xm = x0;
  for (int j = 0; j < n; ++j) {
    xp[j] = h;
    xm[j] = -h;
    a.col(j) = (ocp.dynamics(0.0, xp, u0) - ocp.dynamics(0.0, xm, u0)) / (2 * h);
    xp[j] = 0.0;
    xm[j] = 0.0;
  }
  b.resize(n, m);
  VectorXd up = u0, um = u0;
  for (int j = 0; j < m; ++j) {
    up[j] = h;
    um[j] = -h;
    b.col(j) = (ocp.dynamics(0.0, x0, up) - ocp.dynamics(0.0, x0, um)) / (2 * h);
    up[j] = 0.0;
    um[j] = 0.0;
  }
}

// Hessian of a scalar quadratic by central second differences; exact for the
// quadratic costs both benchmarks use.
template <typename Fn>
MatrixXd quadratic_hessian(const Fn& fn, int dim) {
  const double h = 1e-3;
  MatrixXd hess(dim, dim);
  VectorXd e = VectorXd::Zero(dim);
  const double f0 = fn(e);
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      VectorXd pp = VectorXd::Zero(dim), pm = pp, mp = pp, mm = pp;
      pp[i] += h;
      pp[j] += h;
      pm[i] += h;
      pm[j] -= h;
      mp[i] -= h;
      mp[j] += h;
      mm[i] -= h;
      mm[j] -= h;
      double value;
      if (i == j) {
        VectorXd p = VectorXd::Zero(dim), m = p;
        p[i] = h;
        m[i] = -h;
        value = (fn(p) - 2.0 * f0 + fn(m)) / (h * h);
      } else {
        value = (fn(pp) - fn(pm) - fn(mp) + fn(mm)) / (4.0 * h * h);
      }
      hess(i, j) = value;
      hess(j, i) = value;
    }
  }
  return hess;
}

}  // namespace

LqrBaseline::LqrBaseline(const Ocp& ocp)
    : n_(ocp.state_dim()), final_time_(ocp.final_time()) {
  const int m = ocp.control_dim();
  linearize_at_origin(ocp, a_, b_);

  const VectorXd zero_u = VectorXd::Zero(m);
  const VectorXd zero_x = VectorXd::Zero(n_);
  q_ = quadratic_hessian(
      [&](const VectorXd& x) { return ocp.running_cost(0.0, x, zero_u); }, n_);
  r_ = quadratic_hessian(
      [&](const VectorXd& u) { return ocp.running_cost(0.0, zero_x, u); }, m);
  qf_ = quadratic_hessian(
      [&](const VectorXd& x) { return ocp.terminal_cost(x); }, n_);

  Eigen::LLT<MatrixXd> llt(r_);
  if (llt.info() != Eigen::Success) {
    throw ConfigurationError("LQR control cost is not positive definite");
  }
  r_inverse_ = llt.solve(MatrixXd::Identity(m, m));

  // Backward Riccati in reversed time s = t_f - t:
  //   dS/ds = A^T S + S A - S B R^{-1} B^T S + Q,  S(0) = Q_f.
  const MatrixXd br_bt = b_ * r_inverse_ * b_.transpose();
  const OdeRhs riccati_rhs = [this, br_bt](double, const VectorXd& flat) {
    const Eigen::Map<const MatrixXd> s_raw(flat.data(), n_, n_);
    const MatrixXd s = 0.5 * (s_raw + s_raw.transpose());
    const MatrixXd ds =
        a_.transpose() * s + s * a_ - s * br_bt * s + q_;
    VectorXd out(n_ * n_);
    Eigen::Map<MatrixXd>(out.data(), n_, n_) = ds;
    if (!out.allFinite()) {
      throw NumericError("Riccati integration blew up (check linearization)");
    }
    return out;
  };

  VectorXd s0(n_ * n_);
  Eigen::Map<MatrixXd>(s0.data(), n_, n_) = qf_;
  backward_ = integrate_ivp(riccati_rhs, 0.0, final_time_, s0, 1e-10, 1e-12);
}

MatrixXd LqrBaseline::riccati(double t) const {
  const double s = std::min(std::max(final_time_ - t, 0.0), final_time_);
  const VectorXd flat = backward_.eval(s);
  const Eigen::Map<const MatrixXd> p(flat.data(), n_, n_);
  return 0.5 * (p + p.transpose());
}

MatrixXd LqrBaseline::gain(double t) const {
  return r_inverse_ * b_.transpose() * riccati(t);
}

double LqrBaseline::value(const Eigen::Ref<const VectorXd>& x) const {
  return 0.5 * x.dot(riccati(0.0) * x);
}

Controller LqrBaseline::controller() const {
  return [this](double t, const VectorXd& x) -> VectorXd {
    return -(gain(t) * x);
  };
}

LqrBaseline lqr_controller(const Ocp& ocp) { return LqrBaseline(ocp); }

}  // namespace hjbflow
