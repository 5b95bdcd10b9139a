#ifndef HJBFLOW_BVP_BENCH_HPP
#define HJBFLOW_BVP_BENCH_HPP

#include <string>
#include <vector>

#include "hjbflow/trajectory.hpp"

namespace hjbflow {

struct BenchMethodSpec {
  std::string label;
  SolveMethod method;
};

struct BenchRow {
  std::string label;
  int attempts = 0;
  int converged = 0;
  double convergence_fraction = 0.0;
  // Mean wall-clock time of the full solve, successful attempts only.
  double mean_solve_seconds = 0.0;
};

// Runs every method over the same fixed set of initial conditions. Failures
// are data, not errors; an empty IC set yields an empty table.
std::vector<BenchRow> bvp_benchmark(const Ocp& ocp,
                                    const std::vector<VectorXd>& ic_set,
                                    const std::vector<BenchMethodSpec>& methods,
                                    const TrajectorySolveOptions& options = {},
                                    int workers = 1);

// CSV with header method,attempts,converged,convergence_fraction,
// mean_solve_seconds.
void write_benchmark_csv(const std::vector<BenchRow>& rows,
                         const std::string& path);

}  // namespace hjbflow

#endif  // HJBFLOW_BVP_BENCH_HPP
