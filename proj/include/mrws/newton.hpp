#pragma once

#include <Eigen/SparseCore>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mrws {

struct NewtonOptions {
  double abs_tol = 1e-12;      // stop once ||F||_inf <= abs_tol
  int max_iter = 100;
  double armijo = 1e-4;
  double min_step = 0x1p-30;
  int polish_steps = 3;        // extra full steps after reaching abs_tol while ||F|| keeps falling
};

struct NewtonResult {
  std::vector<double> x;
  double residual_inf = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string diagnostics;
};

using ResidualFn = std::function<void(std::span<const double> x, std::span<double> f)>;
using JacobianFn = std::function<void(std::span<const double> x, Eigen::SparseMatrix<double>& jac)>;

/// Damped Newton with an Armijo test on ||F||_inf. When the Jacobian is
/// singular or the line search stalls, the step is recomputed with
/// J + mu I for increasing mu (starting proportional to ||F||_inf).
/// Solver Jacobians here have nonnegative diagonals, so the shift only
/// ever moves the step toward a scaled residual descent.
NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian,
                          std::vector<double> x0, const NewtonOptions& options);

}  // namespace mrws
