#ifndef HJBFLOW_IVP_HPP
#define HJBFLOW_IVP_HPP

#include <functional>
#include <vector>

#include "hjbflow/common.hpp"

namespace hjbflow {

using OdeRhs = std::function<VectorXd(double t, const VectorXd& y)>;

// Solution of an initial value problem from the adaptive Dormand-Prince 5(4)
// integrator. Dense output is a quartic interpolant per accepted step;
// evaluation at a stored mesh time returns the stored state exactly.
class IvpSolution {
 public:
  const std::vector<double>& times() const { return times_; }
  const std::vector<VectorXd>& states() const { return states_; }
  int steps_accepted() const { return steps_accepted_; }
  int steps_rejected() const { return steps_rejected_; }
  int rhs_evaluations() const { return rhs_evaluations_; }
  double start_time() const { return times_.front(); }
  double end_time() const { return times_.back(); }
  const VectorXd& final_state() const { return states_.back(); }

  VectorXd eval(double t) const;
  MatrixXd eval(const std::vector<double>& ts) const;  // column per time

 private:
  friend IvpSolution integrate_ivp(const OdeRhs&, double, double,
                                   const VectorXd&, double, double);
  std::vector<double> times_;
  std::vector<VectorXd> states_;
  std::vector<MatrixXd> dense_coeffs_;  // per step: d x 4 polynomial coeffs
  int steps_accepted_ = 0;
  int steps_rejected_ = 0;
  int rhs_evaluations_ = 0;
};

struct IvpFailure : NumericError {
  IvpFailure(const std::string& what, double reached)
      : NumericError(what), last_time(reached) {}
  double last_time;
};

// Integrates y' = rhs(t, y) from t0 to t1 with local error per step bounded
// by abs_tol + rel_tol * |y|. Throws IvpFailure on step-size underflow,
// carrying the last reached time.
IvpSolution integrate_ivp(const OdeRhs& rhs, double t0, double t1,
                          const VectorXd& y0, double rel_tol = 1e-8,
                          double abs_tol = 1e-10);

}  // namespace hjbflow

#endif  // HJBFLOW_IVP_HPP
