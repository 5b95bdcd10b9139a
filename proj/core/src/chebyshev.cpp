#include "hjbflow/chebyshev.hpp"

#include <cmath>

namespace hjbflow {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

VectorXd ChebyshevOperators::interior_nodes() const {
  const auto n = nodes.size() - 2;
  return nodes.segment(1, n);
}

MatrixXd ChebyshevOperators::interior_d1() const {
  const auto n = nodes.size() - 2;
  return d1.block(1, 1, n, n);
}

MatrixXd ChebyshevOperators::interior_d2() const {
  const auto n = nodes.size() - 2;
  return d2.block(1, 1, n, n);
}

VectorXd ChebyshevOperators::interior_weights() const {
  const auto n = nodes.size() - 2;
  return weights.segment(1, n);
}

ChebyshevOperators chebyshev_operators(int n_c) {
  if (n_c < 2) throw ConfigurationError("chebyshev_operators requires N_c >= 2");
  const int m = n_c + 1;

  ChebyshevOperators ops;
  ops.nodes.resize(m);
  for (int j = 0; j < m; ++j) ops.nodes[j] = std::cos(j * kPi / n_c);

  // First derivative, off-diagonal entries d_ij = (c_i/c_j)(-1)^{i+j}/(x_i-x_j)
  // with c_0 = c_N = 2 and c_j = 1 otherwise; diagonal from the negative-sum
  // trick to cancel rounding in the row sums.
  ops.d1.setZero(m, m);
  auto c = [&](int j) { return (j == 0 || j == n_c) ? 2.0 : 1.0; };
  for (int i = 0; i < m; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      const double entry = (c(i) / c(j)) * sign / (ops.nodes[i] - ops.nodes[j]);
      ops.d1(i, j) = entry;
      row_sum += entry;
    }
    ops.d1(i, i) = -row_sum;
  }
  ops.d2 = ops.d1 * ops.d1;

  // Clenshaw-Curtis weights on the same nodes.
  ops.weights.resize(m);
  const bool even = (n_c % 2 == 0);
  const double end_weight = even ? 1.0 / (static_cast<double>(n_c) * n_c - 1.0)
                                 : 1.0 / (static_cast<double>(n_c) * n_c);
  ops.weights[0] = end_weight;
  ops.weights[n_c] = end_weight;
  for (int j = 1; j < n_c; ++j) {
    const double theta = j * kPi / n_c;
    double v = 1.0;
    const int half = even ? n_c / 2 - 1 : (n_c - 1) / 2;
    for (int k = 1; k <= half; ++k) {
      v -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
    }
    if (even) {
      v -= std::cos(n_c * theta) / (static_cast<double>(n_c) * n_c - 1.0);
    }
    ops.weights[j] = 2.0 * v / n_c;
  }
  return ops;
}

}  // namespace hjbflow
