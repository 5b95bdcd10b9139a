#ifndef HJBFLOW_BVP_HPP
#define HJBFLOW_BVP_HPP

#include <functional>
#include <string>

#include "hjbflow/common.hpp"

namespace hjbflow {

using BvpRhs = std::function<VectorXd(double t, const VectorXd& y)>;
using BvpBc = std::function<VectorXd(const VectorXd& ya, const VectorXd& yb)>;

struct BvpOptions {
  // Converged iff the max normalized RMS collocation residual over all mesh
  // intervals is <= tol and the boundary residual is <= bc_tol.
  double tol = 1e-5;
  double bc_tol = -1.0;  // defaults to tol when negative
  int max_nodes = 5000;
  // Fixed-mesh mode (no residual-driven refinement), used by the
  // order-of-convergence study.
  bool allow_refinement = true;
  // Safety net only; max_nodes is the effective bound on refinement.
  int max_mesh_iterations = 60;
};

// Cubic-collocation solution. The interpolant is the C1 cubic matching states
// and derivatives at the mesh nodes; it satisfies the ODE at the nodes and
// interval midpoints (three-stage Lobatto IIIa).
class BvpSolution {
 public:
  bool converged = false;
  std::string failure_reason;  // empty when converged
  VectorXd mesh;               // strictly increasing node times
  MatrixXd states;             // d x m
  double max_residual = 0.0;   // max normalized RMS collocation residual
  double max_bc_residual = 0.0;
  int newton_iterations = 0;
  int jacobian_factorizations = 0;

  int node_count() const { return static_cast<int>(mesh.size()); }

  VectorXd eval(double t) const;
  VectorXd eval_derivative(double t) const;
  MatrixXd eval(const VectorXd& ts) const;

 private:
  friend class CollocationSolver;
  // Per-interval cubic coefficients in the local variable s = t - t_i:
  // y(s) = ((c3 s + c2) s + c1) s + c0.
  MatrixXd c0_, c1_, c2_, c3_;
  int find_interval(double t) const;
};

// Damped-Newton solution of the cubic collocation equations with
// residual-driven mesh refinement. Never throws on solver breakdown: Newton
// divergence, singular collocation matrices, and evaluation errors from the
// RHS all surface as converged == false with a reason.
BvpSolution solve_bvp(const BvpRhs& rhs, const BvpBc& bc, const VectorXd& mesh0,
                      const MatrixXd& guess0, const BvpOptions& options = {});

}  // namespace hjbflow

#endif  // HJBFLOW_BVP_HPP
