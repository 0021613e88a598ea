#include "mrws/newton.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <optional>

namespace mrws {

namespace {

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return std::isfinite(m) ? m : HUGE_VAL;
}

std::optional<Eigen::VectorXd> solve_shifted(const Eigen::SparseMatrix<double>& jac, double mu,
                                             const Eigen::VectorXd& rhs) {
  Eigen::SparseMatrix<double> a = jac;
  if (mu > 0.0) {
    Eigen::SparseMatrix<double> shift(a.rows(), a.cols());
    shift.setIdentity();
    a += mu * shift;
  }
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd d = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !d.allFinite()) return std::nullopt;
  return d;
}

}  // namespace

NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian,
                          std::vector<double> x0, const NewtonOptions& options) {
  const std::size_t n = x0.size();
  NewtonResult out;
  out.x = std::move(x0);
  std::vector<double> f(n), trial(n), f_trial(n);
  residual(out.x, f);
  double r = inf_norm(f);
  Eigen::SparseMatrix<double> jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  // One damped step; returns false when no shift produced an acceptable step.
  auto step = [&](bool require_armijo) {
    jacobian(out.x, jac);
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(n));
    double scale = 0.0;
    for (Eigen::Index k = 0; k < jac.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(jac, k); it; ++it)
        scale = std::max(scale, std::abs(it.value()));
    if (scale == 0.0) scale = 1.0;

    double mu = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      if (!require_armijo && attempt > 0) break;
      if (attempt == 1) mu = std::max(1e-8 * r, 1e-14 * scale);
      else if (attempt > 1) mu *= 100.0;
      const auto d = solve_shifted(jac, mu, rhs);
      if (!d) continue;
      for (double t = 1.0; t >= options.min_step; t *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = out.x[i] + t * (*d)[static_cast<Eigen::Index>(i)];
        residual(trial, f_trial);
        const double rt = inf_norm(f_trial);
        const bool ok = require_armijo ? rt <= (1.0 - options.armijo * t) * r : rt < r;
        if (ok) {
          out.x.swap(trial);
          f.swap(f_trial);
          r = rt;
          return true;
        }
        if (!require_armijo) break;
      }
    }
    return false;
  };

  while (r > options.abs_tol && out.iterations < options.max_iter) {
    ++out.iterations;
    if (!step(true)) {
      out.residual_inf = r;
      out.diagnostics = "line search stalled at residual " + std::to_string(r);
      return out;
    }
  }
  if (r <= options.abs_tol) {
    out.converged = true;
    for (int k = 0; k < options.polish_steps && r > 0.0; ++k)
      if (!step(false)) break;
  } else {
    out.diagnostics = "max_iter reached at residual " + std::to_string(r);
  }
  out.residual_inf = r;
  return out;
}

}  // namespace mrws
