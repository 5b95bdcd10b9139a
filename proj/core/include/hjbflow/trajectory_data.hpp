#ifndef HJBFLOW_TRAJECTORY_DATA_HPP
#define HJBFLOW_TRAJECTORY_DATA_HPP

#include <string>

#include "hjbflow/common.hpp"

namespace hjbflow {

enum class GenerationMethod { kTimeMarch, kWarmStart };

inline const char* to_string(GenerationMethod m) {
  return m == GenerationMethod::kTimeMarch ? "time-march" : "warm-start";
}

struct SolverDiagnostics {
  int newton_iterations = 0;
  int node_count = 0;
  double max_residual = 0.0;
  double max_bc_residual = 0.0;
  double solve_seconds = 0.0;
};

// One converged Pontryagin BVP solution sampled at the final solver mesh.
// Along the trajectory v(t) is the cost-to-go, nonincreasing in t, and
// lambda(t_f) = F_x(x(t_f)) up to the solver tolerance.
struct TrajectoryData {
  VectorXd initial_state;
  VectorXd times;     // m samples
  MatrixXd states;    // n x m
  MatrixXd costates;  // n x m
  VectorXd values;    // m
  GenerationMethod method = GenerationMethod::kTimeMarch;
  SolverDiagnostics diagnostics;

  int sample_count() const { return static_cast<int>(times.size()); }
  double value_at_start() const { return values[0]; }
};

}  // namespace hjbflow

#endif  // HJBFLOW_TRAJECTORY_DATA_HPP
