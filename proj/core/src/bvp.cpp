#include "hjbflow/bvp.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <vector>

namespace hjbflow {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct EvalError {};

// Wraps the user RHS/BC so that domain and numeric exceptions surface as a
// solver failure instead of propagating out of solve_bvp.
class GuardedSystem {
 public:
  GuardedSystem(const BvpRhs& rhs, const BvpBc& bc) : rhs_(rhs), bc_(bc) {}

  VectorXd f(double t, const VectorXd& y) const {
    try {
      VectorXd v = rhs_(t, y);
      if (!v.allFinite()) throw EvalError{};
      return v;
    } catch (const EvalError&) {
      throw;
    } catch (const std::exception&) {
      throw EvalError{};
    }
  }

  // Column-wise evaluation, F(:,j) = f(ts[j], Y(:,j)).
  MatrixXd f_columns(const VectorXd& ts, const MatrixXd& y) const {
    MatrixXd out(y.rows(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) out.col(j) = f(ts[j], y.col(j));
    return out;
  }

  VectorXd g(const VectorXd& ya, const VectorXd& yb) const {
    try {
      VectorXd v = bc_(ya, yb);
      if (!v.allFinite()) throw EvalError{};
      return v;
    } catch (const EvalError&) {
      throw;
    } catch (const std::exception&) {
      throw EvalError{};
    }
  }

 private:
  const BvpRhs& rhs_;
  const BvpBc& bc_;
};

// Forward-difference Jacobian of f with respect to y at one point.
MatrixXd fun_jacobian(const GuardedSystem& sys, double t, const VectorXd& y,
                      const VectorXd& f0) {
  const auto d = y.size();
  MatrixXd jac(d, d);
  VectorXd yp = y;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double step = std::sqrt(kEps) * (1.0 + std::abs(y[j]));
    yp[j] = y[j] + step;
    jac.col(j) = (sys.f(t, yp) - f0) / (yp[j] - y[j]);
    yp[j] = y[j];
  }
  return jac;
}

void bc_jacobians(const GuardedSystem& sys, const VectorXd& ya,
                  const VectorXd& yb, const VectorXd& bc0, MatrixXd& dbc_dya,
                  MatrixXd& dbc_dyb) {
  const auto d = ya.size();
  dbc_dya.resize(d, d);
  dbc_dyb.resize(d, d);
  VectorXd yp = ya;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double step = std::sqrt(kEps) * (1.0 + std::abs(ya[j]));
    yp[j] = ya[j] + step;
    dbc_dya.col(j) = (sys.g(yp, yb) - bc0) / (yp[j] - ya[j]);
    yp[j] = ya[j];
  }
  yp = yb;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double step = std::sqrt(kEps) * (1.0 + std::abs(yb[j]));
    yp[j] = yb[j] + step;
    dbc_dyb.col(j) = (sys.g(ya, yp) - bc0) / (yp[j] - yb[j]);
    yp[j] = yb[j];
  }
}

struct CollocationState {
  MatrixXd f;        // d x m, RHS at nodes
  MatrixXd y_middle; // d x (m-1)
  MatrixXd f_middle; // d x (m-1)
  MatrixXd col_res;  // d x (m-1)
};

// Lobatto IIIa collocation residual: the cubic through (y_i, f_i, y_{i+1},
// f_{i+1}) must satisfy the ODE at the interval midpoint, which reduces to a
// Simpson-like identity.
CollocationState collocation_residual(const GuardedSystem& sys,
                                      const VectorXd& mesh, const VectorXd& h,
                                      const MatrixXd& y) {
  const auto m = mesh.size();
  CollocationState st;
  st.f = sys.f_columns(mesh, y);
  st.y_middle = 0.5 * (y.rightCols(m - 1) + y.leftCols(m - 1));
  st.y_middle -= (st.f.rightCols(m - 1) - st.f.leftCols(m - 1)) *
                 (0.125 * h).asDiagonal();
  VectorXd t_middle = mesh.head(m - 1) + 0.5 * h;
  st.f_middle = sys.f_columns(t_middle, st.y_middle);
  st.col_res = y.rightCols(m - 1) - y.leftCols(m - 1) -
               (st.f.leftCols(m - 1) + st.f.rightCols(m - 1) +
                4.0 * st.f_middle) *
                   (h / 6.0).asDiagonal();
  return st;
}

}  // namespace

int BvpSolution::find_interval(double t) const {
  const auto m = mesh.size();
  int lo = 0;
  int hi = static_cast<int>(m) - 2;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (mesh[mid] <= t) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

VectorXd BvpSolution::eval(double t) const {
  const int k = find_interval(t);
  const double s = t - mesh[k];
  return c0_.col(k) + s * (c1_.col(k) + s * (c2_.col(k) + s * c3_.col(k)));
}

VectorXd BvpSolution::eval_derivative(double t) const {
  const int k = find_interval(t);
  const double s = t - mesh[k];
  return c1_.col(k) + s * (2.0 * c2_.col(k) + s * 3.0 * c3_.col(k));
}

MatrixXd BvpSolution::eval(const VectorXd& ts) const {
  MatrixXd out(states.rows(), ts.size());
  for (Eigen::Index j = 0; j < ts.size(); ++j) out.col(j) = eval(ts[j]);
  return out;
}

class CollocationSolver {
 public:
  CollocationSolver(const BvpRhs& rhs, const BvpBc& bc, BvpOptions options)
      : sys_(rhs, bc), options_(options) {
    if (options_.bc_tol < 0) options_.bc_tol = options_.tol;
  }

  BvpSolution solve(const VectorXd& mesh0, const MatrixXd& guess0);

 private:
  struct NewtonOutcome {
    bool singular = false;
    bool eval_error = false;
  };

  NewtonOutcome newton(const VectorXd& mesh, const VectorXd& h, MatrixXd& y,
                       BvpSolution& sol);
  void build_spline(const VectorXd& mesh, const VectorXd& h, const MatrixXd& y,
                    const MatrixXd& f, BvpSolution& sol) const;
  VectorXd rms_residuals(const VectorXd& mesh, const VectorXd& h,
                         const BvpSolution& sol, const CollocationState& st) const;

  GuardedSystem sys_;
  BvpOptions options_;
};

CollocationSolver::NewtonOutcome CollocationSolver::newton(const VectorXd& mesh,
                                                           const VectorXd& h,
                                                           MatrixXd& y,
                                                           BvpSolution& sol) {
  const auto d = y.rows();
  const auto m = y.cols();
  const auto n_unknowns = d * m;

  // Newton terminates when collocation residuals drop about 1.5 orders below
  // the mesh tolerance; see Kierzenka & Shampine for the rationale.
  const VectorXd tol_r = (2.0 / 3.0) * h * 5e-2 * options_.tol;
  constexpr int kMaxJacobians = 4;
  constexpr int kMaxIterations = 8;
  constexpr double kSigma = 0.2;  // Armijo constant
  constexpr double kTau = 0.5;    // backtracking factor
  constexpr int kMaxBacktracks = 4;

  NewtonOutcome outcome;
  Eigen::SparseMatrix<double> jac(n_unknowns, n_unknowns);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>((m - 1) * 2 * d * d + 2 * d * d));

  try {
    CollocationState st = collocation_residual(sys_, mesh, h, y);
    VectorXd bc_res = sys_.g(y.col(0), y.col(m - 1));

    auto assemble_residual = [&](const CollocationState& cs,
                                 const VectorXd& bcr) {
      VectorXd res(n_unknowns);
      for (Eigen::Index i = 0; i < m - 1; ++i)
        res.segment(i * d, d) = cs.col_res.col(i);
      res.tail(d) = bcr;
      return res;
    };

    VectorXd res = assemble_residual(st, bc_res);
    VectorXd step(n_unknowns);
    double cost = 0.0;
    bool recompute_jac = true;
    int njev = 0;

    for (int iteration = 0; iteration < kMaxIterations; ++iteration) {
      if (recompute_jac) {
        triplets.clear();
        MatrixXd dbc_dya, dbc_dyb;
        bc_jacobians(sys_, y.col(0), y.col(m - 1), bc_res, dbc_dya, dbc_dyb);

        MatrixXd df_prev =
            fun_jacobian(sys_, mesh[0], y.col(0), st.f.col(0));
        for (Eigen::Index i = 0; i < m - 1; ++i) {
          const MatrixXd df_next =
              fun_jacobian(sys_, mesh[i + 1], y.col(i + 1), st.f.col(i + 1));
          const MatrixXd df_mid = fun_jacobian(
              sys_, mesh[i] + 0.5 * h[i], st.y_middle.col(i), st.f_middle.col(i));

          const double hi = h[i];
          MatrixXd block0 = -MatrixXd::Identity(d, d) -
                            hi / 6.0 * (df_prev + 2.0 * df_mid) -
                            hi * hi / 12.0 * (df_mid * df_prev);
          MatrixXd block1 = MatrixXd::Identity(d, d) -
                            hi / 6.0 * (df_next + 2.0 * df_mid) +
                            hi * hi / 12.0 * (df_mid * df_next);
          for (Eigen::Index r = 0; r < d; ++r) {
            for (Eigen::Index c = 0; c < d; ++c) {
              triplets.emplace_back(i * d + r, i * d + c, block0(r, c));
              triplets.emplace_back(i * d + r, (i + 1) * d + c, block1(r, c));
            }
          }
          df_prev = df_next;
        }
        const Eigen::Index bc_row = (m - 1) * d;
        for (Eigen::Index r = 0; r < d; ++r) {
          for (Eigen::Index c = 0; c < d; ++c) {
            triplets.emplace_back(bc_row + r, c, dbc_dya(r, c));
            triplets.emplace_back(bc_row + r, (m - 1) * d + c, dbc_dyb(r, c));
          }
        }
        jac.setFromTriplets(triplets.begin(), triplets.end());
        lu.compute(jac);
        sol.jacobian_factorizations += 1;
        njev += 1;
        if (lu.info() != Eigen::Success) {
          outcome.singular = true;
          return outcome;
        }
        step = lu.solve(res);
        cost = step.squaredNorm();
        if (!std::isfinite(cost)) {
          outcome.singular = true;
          return outcome;
        }
      }

      // Backtracking on the affine-invariant level function |J^{-1} r|^2.
      double alpha = 1.0;
      MatrixXd y_new;
      VectorXd step_new;
      double cost_new = 0.0;
      for (int trial = 0; trial <= kMaxBacktracks; ++trial) {
        y_new = y;
        for (Eigen::Index i = 0; i < m; ++i)
          y_new.col(i) -= alpha * step.segment(i * d, d);

        st = collocation_residual(sys_, mesh, h, y_new);
        bc_res = sys_.g(y_new.col(0), y_new.col(m - 1));
        res = assemble_residual(st, bc_res);
        step_new = lu.solve(res);
        cost_new = step_new.squaredNorm();
        if (cost_new < (1.0 - 2.0 * alpha * kSigma) * cost) break;
        if (trial < kMaxBacktracks) alpha *= kTau;
      }

      y = y_new;
      sol.newton_iterations += 1;

      if (njev == kMaxJacobians) break;

      bool res_ok = true;
      for (Eigen::Index i = 0; i < m - 1 && res_ok; ++i) {
        res_ok = (st.col_res.col(i).array().abs() <=
                  tol_r[i] * (1.0 + st.f_middle.col(i).array().abs()))
                     .all();
      }
      if (res_ok && (bc_res.array().abs() <= options_.bc_tol).all()) break;

      if (alpha == 1.0) {
        step = step_new;
        cost = cost_new;
        recompute_jac = false;
      } else {
        recompute_jac = true;
      }
    }
  } catch (const EvalError&) {
    outcome.eval_error = true;
  }
  return outcome;
}

void CollocationSolver::build_spline(const VectorXd& mesh, const VectorXd& h,
                                     const MatrixXd& y, const MatrixXd& f,
                                     BvpSolution& sol) const {
  const auto m = mesh.size();
  const auto d = y.rows();
  sol.mesh = mesh;
  sol.states = y;
  sol.c0_.resize(d, m - 1);
  sol.c1_.resize(d, m - 1);
  sol.c2_.resize(d, m - 1);
  sol.c3_.resize(d, m - 1);
  for (Eigen::Index i = 0; i < m - 1; ++i) {
    const double hi = h[i];
    const VectorXd slope = (y.col(i + 1) - y.col(i)) / hi;
    const VectorXd t = (f.col(i) + f.col(i + 1) - 2.0 * slope) / hi;
    sol.c0_.col(i) = y.col(i);
    sol.c1_.col(i) = f.col(i);
    sol.c2_.col(i) = (slope - f.col(i)) / hi - t;
    sol.c3_.col(i) = t / hi;
  }
}

VectorXd CollocationSolver::rms_residuals(const VectorXd& mesh,
                                          const VectorXd& h,
                                          const BvpSolution& sol,
                                          const CollocationState& st) const {
  // Five-point Lobatto quadrature of the normalized squared ODE residual of
  // the collocation spline. Endpoint residuals vanish by construction; the
  // midpoint residual equals 1.5 * col_res / h.
  const auto m = mesh.size();
  VectorXd rms(m - 1);
  const double offset = 0.5 * std::sqrt(3.0 / 7.0);
  for (Eigen::Index i = 0; i < m - 1; ++i) {
    const double t_mid = mesh[i] + 0.5 * h[i];
    const double t1 = t_mid + offset * h[i];
    const double t2 = t_mid - offset * h[i];

    VectorXd r_mid = 1.5 * st.col_res.col(i) / h[i];
    r_mid.array() /= 1.0 + st.f_middle.col(i).array().abs();

    VectorXd y1 = sol.eval(t1);
    VectorXd f1 = sys_.f(t1, y1);
    VectorXd r1 = sol.eval_derivative(t1) - f1;
    r1.array() /= 1.0 + f1.array().abs();

    VectorXd y2 = sol.eval(t2);
    VectorXd f2 = sys_.f(t2, y2);
    VectorXd r2 = sol.eval_derivative(t2) - f2;
    r2.array() /= 1.0 + f2.array().abs();

    rms[i] = std::sqrt(0.5 * (32.0 / 45.0 * r_mid.squaredNorm() +
                              49.0 / 90.0 * (r1.squaredNorm() + r2.squaredNorm())));
  }
  return rms;
}

BvpSolution CollocationSolver::solve(const VectorXd& mesh0,
                                     const MatrixXd& guess0) {
  HJBFLOW_REQUIRE(mesh0.size() >= 2, "mesh needs at least two nodes");
  HJBFLOW_REQUIRE(guess0.cols() == mesh0.size(),
                  "guess must be defined on the initial mesh");
  for (Eigen::Index i = 0; i + 1 < mesh0.size(); ++i) {
    HJBFLOW_REQUIRE(mesh0[i] < mesh0[i + 1], "mesh must be strictly increasing");
  }

  VectorXd mesh = mesh0;
  MatrixXd y = guess0;
  BvpSolution sol;

  for (int iteration = 0; iteration < options_.max_mesh_iterations; ++iteration) {
    const auto m = mesh.size();
    const VectorXd h = mesh.tail(m - 1) - mesh.head(m - 1);

    const NewtonOutcome outcome = newton(mesh, h, y, sol);
    if (outcome.singular || outcome.eval_error) {
      sol.converged = false;
      sol.failure_reason = outcome.singular
                               ? "singular collocation Jacobian"
                               : "RHS/BC evaluation failed during Newton";
      sol.mesh = mesh;
      sol.states = y;
      return sol;
    }

    CollocationState st;
    VectorXd bc_res;
    try {
      st = collocation_residual(sys_, mesh, h, y);
      bc_res = sys_.g(y.col(0), y.col(m - 1));
    } catch (const EvalError&) {
      sol.converged = false;
      sol.failure_reason = "RHS/BC evaluation failed on the Newton iterate";
      sol.mesh = mesh;
      sol.states = y;
      return sol;
    }
    build_spline(mesh, h, y, st.f, sol);
    sol.max_bc_residual = bc_res.cwiseAbs().maxCoeff();

    VectorXd rms;
    try {
      rms = rms_residuals(mesh, h, sol, st);
    } catch (const EvalError&) {
      sol.converged = false;
      sol.failure_reason = "RHS evaluation failed in residual estimation";
      return sol;
    }
    sol.max_residual = rms.maxCoeff();

    std::vector<Eigen::Index> insert_one, insert_two;
    for (Eigen::Index i = 0; i < rms.size(); ++i) {
      if (rms[i] > options_.tol && rms[i] < 100.0 * options_.tol) {
        insert_one.push_back(i);
      } else if (rms[i] >= 100.0 * options_.tol) {
        insert_two.push_back(i);
      }
    }
    const auto nodes_added =
        static_cast<Eigen::Index>(insert_one.size() + 2 * insert_two.size());

    if (!options_.allow_refinement) {
      sol.converged = sol.max_residual <= options_.tol &&
                      sol.max_bc_residual <= options_.bc_tol;
      if (!sol.converged) sol.failure_reason = "fixed mesh did not meet tolerance";
      return sol;
    }

    if (m + nodes_added > options_.max_nodes) {
      sol.converged = false;
      sol.failure_reason = "maximum number of mesh nodes exceeded";
      return sol;
    }

    if (nodes_added > 0) {
      VectorXd new_mesh(m + nodes_added);
      Eigen::Index k = 0;
      std::size_t i1 = 0, i2 = 0;
      for (Eigen::Index i = 0; i < m - 1; ++i) {
        new_mesh[k++] = mesh[i];
        if (i1 < insert_one.size() && insert_one[i1] == i) {
          new_mesh[k++] = mesh[i] + 0.5 * h[i];
          ++i1;
        } else if (i2 < insert_two.size() && insert_two[i2] == i) {
          new_mesh[k++] = mesh[i] + h[i] / 3.0;
          new_mesh[k++] = mesh[i] + 2.0 * h[i] / 3.0;
          ++i2;
        }
      }
      new_mesh[k] = mesh[m - 1];
      y = sol.eval(new_mesh);
      mesh = std::move(new_mesh);
      continue;
    }

    if (sol.max_bc_residual <= options_.bc_tol) {
      sol.converged = true;
      return sol;
    }
    sol.converged = false;
    sol.failure_reason = "boundary condition tolerance not met";
    return sol;
  }

  sol.converged = false;
  sol.failure_reason = "mesh iteration limit reached";
  return sol;
}

BvpSolution solve_bvp(const BvpRhs& rhs, const BvpBc& bc, const VectorXd& mesh0,
                      const MatrixXd& guess0, const BvpOptions& options) {
  CollocationSolver solver(rhs, bc, options);
  return solver.solve(mesh0, guess0);
}

}  // namespace hjbflow
