#include "hjbflow/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace hjbflow {

namespace {

struct LinePoint {
  double alpha;
  double value;
  double slope;  // d f(theta + alpha p) / d alpha
};

// Cubic interpolation minimizer on [a, b] with values/slopes at both ends;
// falls back to bisection when the cubic is degenerate or leaves the bracket.
double interpolate_step(const LinePoint& a, const LinePoint& b) {
  const double d1 =
      a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double step =
        b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) /
                      (b.slope - a.slope + 2.0 * d2);
    const double lo = std::min(a.alpha, b.alpha);
    const double hi = std::max(a.alpha, b.alpha);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(step) && step > lo + margin && step < hi - margin) {
      return step;
    }
  }
  return 0.5 * (a.alpha + b.alpha);
}

}  // namespace

const char* to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::kGradientTolerance:
      return "gradient tolerance reached";
    case LbfgsStatus::kFunctionDecreaseTolerance:
      return "function decrease below tolerance";
    case LbfgsStatus::kIterationLimit:
      return "iteration limit reached";
    case LbfgsStatus::kLineSearchFailed:
      return "line search failed";
    case LbfgsStatus::kNonFiniteObjective:
      return "objective evaluated to a non-finite value";
  }
  return "unknown";
}

LbfgsResult lbfgs_minimize(const Objective& objective, const VectorXd& theta0,
                           const LbfgsConfig& config) {
  HJBFLOW_REQUIRE(config.memory >= 1, "memory must be >= 1");
  HJBFLOW_REQUIRE(0.0 < config.wolfe_c1 && config.wolfe_c1 < config.wolfe_c2 &&
                      config.wolfe_c2 < 1.0,
                  "need 0 < c1 < c2 < 1");

  LbfgsResult result;
  result.theta = theta0;

  VectorXd grad(theta0.size());
  double f = objective(result.theta, grad);
  result.evaluations = 1;
  if (!std::isfinite(f) || !grad.allFinite()) {
    result.status = LbfgsStatus::kNonFiniteObjective;
    result.value = f;
    return result;
  }
  result.value = f;
  result.grad_norm = grad.norm();
  result.trace.push_back({f, result.grad_norm});

  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  VectorXd theta_new(theta0.size());
  VectorXd grad_new(theta0.size());

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (result.grad_norm <= config.grad_tolerance) {
      result.status = LbfgsStatus::kGradientTolerance;
      return result;
    }

    // Two-loop recursion for p = -H grad.
    VectorXd q = grad;
    const int pairs = static_cast<int>(s_hist.size());
    std::vector<double> alpha_coeffs(pairs);
    for (int i = pairs - 1; i >= 0; --i) {
      alpha_coeffs[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha_coeffs[i] * y_hist[i];
    }
    if (pairs > 0) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (int i = 0; i < pairs; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha_coeffs[i] - beta) * s_hist[i];
    }
    VectorXd direction = -q;

    double slope0 = grad.dot(direction);
    if (!(slope0 < 0.0)) {
      // Defective direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -grad;
      slope0 = -grad.squaredNorm();
    }

    // Strong-Wolfe line search (bracket then zoom).
    auto eval_line = [&](double alpha, LinePoint& pt) -> bool {
      theta_new = result.theta + alpha * direction;
      const double value = objective(theta_new, grad_new);
      result.evaluations += 1;
      if (!std::isfinite(value)) return false;
      pt = {alpha, value, grad_new.dot(direction)};
      return true;
    };

    const double c1 = config.wolfe_c1;
    const double c2 = config.wolfe_c2;
    const LinePoint origin{0.0, f, slope0};

    bool accepted = false;
    bool nonfinite_seen = false;
    LinePoint accepted_pt{};
    int evals_left = config.max_line_search_evals;

    LinePoint prev = origin;
    double alpha = (pairs == 0 && iter == 0)
                       ? std::min(1.0, 1.0 / std::max(1e-12, grad.norm()))
                       : 1.0;
    LinePoint lo{}, hi{};
    bool bracketed = false;

    while (evals_left-- > 0) {
      LinePoint pt;
      if (!eval_line(alpha, pt)) {
        // Step into a non-finite region; shrink toward the last good point.
        nonfinite_seen = true;
        alpha = 0.5 * (prev.alpha + alpha);
        if (alpha <= 1e-20) break;
        continue;
      }
      if (pt.value > f + c1 * pt.alpha * slope0 ||
          (prev.alpha > 0.0 && pt.value >= prev.value)) {
        lo = prev;
        hi = pt;
        bracketed = true;
        break;
      }
      if (std::abs(pt.slope) <= -c2 * slope0) {
        accepted = true;
        accepted_pt = pt;
        break;
      }
      if (pt.slope >= 0.0) {
        lo = pt;
        hi = prev;
        bracketed = true;
        break;
      }
      prev = pt;
      alpha *= 2.0;
      if (alpha > 1e12) break;
    }

    if (bracketed && !accepted) {
      while (evals_left-- > 0) {
        const double trial = interpolate_step(lo, hi);
        LinePoint pt;
        if (!eval_line(trial, pt)) {
          // Treat a non-finite trial as worse than lo to pull the bracket in.
          nonfinite_seen = true;
          hi = LinePoint{trial, lo.value + std::abs(lo.value) + 1.0, 0.0};
          continue;
        }
        if (pt.value > f + c1 * pt.alpha * slope0 || pt.value >= lo.value) {
          hi = pt;
        } else {
          if (std::abs(pt.slope) <= -c2 * slope0) {
            accepted = true;
            accepted_pt = pt;
            break;
          }
          if (pt.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
          lo = pt;
        }
        if (std::abs(hi.alpha - lo.alpha) <
            1e-14 * std::max(1.0, std::abs(lo.alpha))) {
          break;
        }
      }
      // Fall back to the sufficient-decrease point found by zoom.
      if (!accepted && lo.alpha > 0.0 && lo.value < f) {
        accepted = true;
        accepted_pt = lo;
        LinePoint pt;
        if (eval_line(lo.alpha, pt)) accepted_pt = pt;
      }
    }

    if (!accepted) {
      result.status = nonfinite_seen ? LbfgsStatus::kNonFiniteObjective
                                     : LbfgsStatus::kLineSearchFailed;
      return result;
    }

    theta_new = result.theta + accepted_pt.alpha * direction;

    VectorXd s = theta_new - result.theta;
    VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    // Curvature pairs must satisfy s^T y > 0; skip the update otherwise.
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double f_prev = f;
    result.theta = theta_new;
    grad = grad_new;
    f = accepted_pt.value;
    result.value = f;
    result.grad_norm = grad.norm();
    result.iterations = iter + 1;
    result.trace.push_back({f, result.grad_norm});

    if (config.f_decrease_tolerance > 0.0 &&
        f_prev - f <= config.f_decrease_tolerance * std::max(1.0, std::abs(f))) {
      result.status = LbfgsStatus::kFunctionDecreaseTolerance;
      return result;
    }
  }
  result.status = result.grad_norm <= config.grad_tolerance
                      ? LbfgsStatus::kGradientTolerance
                      : LbfgsStatus::kIterationLimit;
  return result;
}

}  // namespace hjbflow
