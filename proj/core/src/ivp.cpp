#include "hjbflow/ivp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hjbflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB[7] = {35.0 / 384,     0.0,  500.0 / 1113, 125.0 / 192,
                          -2187.0 / 6784, 11.0 / 84, 0.0};
// Difference between 5th and embedded 4th order weights.
constexpr double kE[7] = {71.0 / 57600, 0.0,        -71.0 / 16695, 71.0 / 1920,
                          -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
// Quartic dense-output coefficients.
constexpr double kP[7][4] = {
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0},
};

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr int kOrderError = 4;  // local error exponent is 1/(order+1)

double rms_norm(const VectorXd& v) {
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

double initial_step(const OdeRhs& rhs, double t0, const VectorXd& y0,
                    const VectorXd& f0, double direction, double rel_tol,
                    double abs_tol, double span) {
  const VectorXd scale = (abs_tol + y0.cwiseAbs().array() * rel_tol).matrix();
  const double d0 = rms_norm(y0.cwiseQuotient(scale));
  const double d1 = rms_norm(f0.cwiseQuotient(scale));
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);

  const VectorXd y1 = y0 + h0 * direction * f0;
  const VectorXd f1 = rhs(t0 + h0 * direction, y1);
  const double d2 = rms_norm((f1 - f0).cwiseQuotient(scale)) / h0;

  double h1;
  if (d1 <= 1e-15 && d2 <= 1e-15) {
    h1 = std::max(1e-6, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / (kOrderError + 1));
  }
  return std::min({100 * h0, h1, span});
}

}  // namespace

VectorXd IvpSolution::eval(double t) const {
  const double lo = std::min(times_.front(), times_.back());
  const double hi = std::max(times_.front(), times_.back());
  HJBFLOW_REQUIRE(t >= lo - 1e-12 * (1 + std::abs(lo)) &&
                      t <= hi + 1e-12 * (1 + std::abs(hi)),
                  "dense-output query outside the integrated span");

  const bool forward = times_.back() >= times_.front();
  // Locate the step containing t; exact node queries return stored states.
  std::size_t k = 0;
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (times_[i] == t) return states_[i];
    const bool past = forward ? times_[i] <= t : times_[i] >= t;
    if (past) k = i;
  }
  if (k >= dense_coeffs_.size()) k = dense_coeffs_.size() - 1;

  const double h = times_[k + 1] - times_[k];
  const double x = (t - times_[k]) / h;
  Eigen::Vector4d powers;
  powers << x, x * x, x * x * x, x * x * x * x;
  return states_[k] + h * (dense_coeffs_[k] * powers);
}

MatrixXd IvpSolution::eval(const std::vector<double>& ts) const {
  MatrixXd out(states_.front().size(), static_cast<Eigen::Index>(ts.size()));
  for (std::size_t i = 0; i < ts.size(); ++i) out.col(i) = eval(ts[i]);
  return out;
}

IvpSolution integrate_ivp(const OdeRhs& rhs, double t0, double t1,
                          const VectorXd& y0, double rel_tol, double abs_tol) {
  HJBFLOW_REQUIRE(y0.allFinite(), "non-finite initial state");
  HJBFLOW_REQUIRE(t1 != t0, "empty integration span");
  const double direction = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const auto d = y0.size();

  IvpSolution sol;
  sol.times_.push_back(t0);
  sol.states_.push_back(y0);

  double t = t0;
  VectorXd y = y0;
  VectorXd f = rhs(t, y);
  sol.rhs_evaluations_ = 1;

  double h = initial_step(rhs, t0, y, f, direction, rel_tol, abs_tol, span);
  sol.rhs_evaluations_ += 1;
  const double h_min_floor = 10.0 * std::numeric_limits<double>::epsilon();

  MatrixXd stages(d, 7);
  while (direction * (t1 - t) > 0) {
    const double h_min = h_min_floor * std::abs(t);
    if (h < h_min || !(h > 0)) {
      throw IvpFailure("step size underflow in integrate_ivp", t);
    }
    h = std::min(h, direction * (t1 - t));

    stages.col(0) = f;
    for (int s = 1; s < 6; ++s) {
      VectorXd ys = y;
      for (int j = 0; j < s; ++j) ys += (h * direction * kA[s][j]) * stages.col(j);
      stages.col(s) = rhs(t + kC[s] * h * direction, ys);
    }
    VectorXd y_new = y;
    for (int j = 0; j < 6; ++j) y_new += (h * direction * kB[j]) * stages.col(j);
    const double t_new = (direction * (t1 - t) <= h * (1 + 1e-12)) ? t1
                          : t + h * direction;
    stages.col(6) = rhs(t_new, y_new);
    sol.rhs_evaluations_ += 6;

    VectorXd err = VectorXd::Zero(d);
    for (int j = 0; j < 7; ++j) err += (h * kE[j]) * stages.col(j);
    const VectorXd scale =
        (abs_tol + rel_tol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array())
            .matrix();
    const double err_norm = rms_norm(err.cwiseQuotient(scale));

    if (!std::isfinite(err_norm)) {
      sol.steps_rejected_ += 1;
      h *= kMinFactor;
      continue;
    }
    if (err_norm <= 1.0) {
      // Dense coefficients are direction-free; eval() scales by the signed
      // step length.
      MatrixXd coeffs = MatrixXd::Zero(d, 4);
      for (int j = 0; j < 7; ++j) {
        for (int p = 0; p < 4; ++p) {
          if (kP[j][p] != 0.0) coeffs.col(p) += kP[j][p] * stages.col(j);
        }
      }
      t = t_new;
      y = y_new;
      f = stages.col(6);
      sol.times_.push_back(t);
      sol.states_.push_back(y);
      sol.dense_coeffs_.push_back(std::move(coeffs));
      sol.steps_accepted_ += 1;
      const double factor =
          err_norm == 0.0
              ? kMaxFactor
              : std::min(kMaxFactor,
                         kSafety * std::pow(err_norm, -1.0 / (kOrderError + 1)));
      h *= factor;
    } else {
      sol.steps_rejected_ += 1;
      h *= std::max(kMinFactor,
                    kSafety * std::pow(err_norm, -1.0 / (kOrderError + 1)));
    }
  }
  return sol;
}

}  // namespace hjbflow
