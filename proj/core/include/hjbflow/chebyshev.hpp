#ifndef HJBFLOW_CHEBYSHEV_HPP
#define HJBFLOW_CHEBYSHEV_HPP

#include "hjbflow/common.hpp"

namespace hjbflow {

// Chebyshev collocation operators on the N_c + 1 nodes
// xi_j = cos(j*pi/N_c), j = 0..N_c, decreasing from +1 to -1.
// d1 is the first-order differentiation matrix (Trefethen's closed form with
// the negative-sum trick on the diagonal), d2 = d1*d1, and weights are the
// Clenshaw-Curtis quadrature weights, exact for polynomials up to degree N_c
// over [-1, 1] (weights sum to 2).
struct ChebyshevOperators {
  VectorXd nodes;
  MatrixXd d1;
  MatrixXd d2;
  VectorXd weights;

  // Interior blocks (rows/columns 1..N_c-1), as used with homogeneous
  // Dirichlet boundary conditions.
  VectorXd interior_nodes() const;
  MatrixXd interior_d1() const;
  MatrixXd interior_d2() const;
  VectorXd interior_weights() const;
};

// Requires n_c >= 2 so that at least one interior node exists.
ChebyshevOperators chebyshev_operators(int n_c);

}  // namespace hjbflow

#endif  // HJBFLOW_CHEBYSHEV_HPP
