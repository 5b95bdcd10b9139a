#ifndef HJBFLOW_LBFGS_HPP
#define HJBFLOW_LBFGS_HPP

#include <functional>
#include <vector>

#include "hjbflow/common.hpp"

namespace hjbflow {

// Objective returning the value and filling the gradient.
using Objective = std::function<double(const VectorXd& theta, VectorXd& grad)>;

struct LbfgsConfig {
  int memory = 10;
  int max_iterations = 500;
  double grad_tolerance = 1e-8;
  // Stop when the per-iteration decrease falls below
  // f_decrease_tolerance * max(1, |f|).
  double f_decrease_tolerance = 1e-12;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search_evals = 25;
};

enum class LbfgsStatus {
  kGradientTolerance,
  kFunctionDecreaseTolerance,
  kIterationLimit,
  kLineSearchFailed,
  kNonFiniteObjective,
};

const char* to_string(LbfgsStatus s);

struct LbfgsTracePoint {
  double value;
  double grad_norm;
};

struct LbfgsResult {
  VectorXd theta;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::kIterationLimit;
  std::vector<LbfgsTracePoint> trace;
};

// Two-loop-recursion L-BFGS with a strong-Wolfe line search. Accepted
// iterates never increase the objective; curvature pairs with s^T y <= 0 are
// skipped. Line-search failure returns the best iterate with a status flag
// instead of throwing.
LbfgsResult lbfgs_minimize(const Objective& objective, const VectorXd& theta0,
                           const LbfgsConfig& config = {});

}  // namespace hjbflow

#endif  // HJBFLOW_LBFGS_HPP
