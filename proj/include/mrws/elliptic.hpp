#pragma once

#include <string>
#include <vector>

#include "mrws/field.hpp"
#include "mrws/leray_lions.hpp"
#include "mrws/space.hpp"

namespace mrws {

/// u - lambda div_m a_p u = z in Omega, N_j u = flux on the m-boundary.
/// `space` and `domain` are borrowed and must outlive the problem.
struct EllipticProblem {
  const Space* space = nullptr;
  const Domain* domain = nullptr;
  LerayLionsMap map;
  Variant variant = Variant::gl;
  double lambda = 1.0;
  Field z;     // on Omega
  Field flux;  // on the boundary

  /// Throws InvalidInput when an invariant fails.
  void validate() const;
};

struct SolveOptions {
  double tol = 1e-12;  // relative: converged once ||F||_inf <= tol (1 + ||z||_inf + ||flux||_inf)
  int max_iter = 100;
  double armijo = 1e-4;
  double min_step = 0x1p-30;
};

struct SolveReport {
  Field u;  // on the closure
  double residual_inf = 0.0;
  int iterations = 0;
  bool converged = false;
  double mass_identity_gap = 0.0;  // |sum_Omega (u - z) nu - lambda sum_boundary flux nu|
  std::vector<Field> penalized_path;
  std::string diagnostics;
};

/// Residual of the full system at a closure field u: Omega rows then
/// boundary rows, in closure order. Exposed for tests and the CLI.
Field resolvent_residual(const EllipticProblem& problem, const Field& u);

/// Solves -sum_{y in Omega} a(x, y, u(y) - r) m_x({y}) = flux(x) for r, one
/// boundary node at a time (bracketing, bisection, Newton polish).
Field extend_boundary_drov(const Space& space, const Domain& domain, const LerayLionsMap& map,
                           const Field& u_interior, const Field& flux);

/// Boundary values solving the coupled gl boundary equations
/// -sum_{y in closure} a(x, y, u(y) - u(x)) m_x({y}) = flux(x) with u fixed on Omega.
Field extend_boundary_gl(const Space& space, const Domain& domain, const LerayLionsMap& map,
                         const Field& u_interior, const Field& flux);

/// Dispatches on the variant.
Field extend_boundary(const Space& space, const Domain& domain, const LerayLionsMap& map,
                      const Field& u_interior, const Field& flux, Variant variant);

/// Damped Newton on the full closure system, started from z on Omega and
/// mean(z) on the boundary. Non-convergence is reported, not thrown.
SolveReport solve_resolvent(const EllipticProblem& problem, const SolveOptions& options = {});

/// Same, with an explicit starting field on the closure (warm start).
SolveReport solve_resolvent(const EllipticProblem& problem, const Field& initial,
                            const SolveOptions& options);

/// L-infinity bound on the penalized solutions:
/// max(||z_nk||, (n ||flux_nk||)^{1/(p-1)}, (k ||flux_nk||)^{1/(p-1)}).
/// Any truncation level K above it leaves T_K inactive at the solution.
double penalized_bound(const EllipticProblem& problem, double n, double k);

/// The penalized approximation: data clipped to [-k, n], T_K(u) in the
/// zeroth-order Omega term and (1/n)|u|^{p-2}u^+ - (1/k)|u|^{p-2}u^- added on
/// the closure. Throws NumericalFailure when Newton does not converge.
Field solve_penalized(const EllipticProblem& problem, double n, double k, double K,
                      const SolveOptions& options = {});

struct OracleOptions {
  double grad_tol = 1e-13;  // on the nu-scaled gradient
  long max_iter = 2'000'000;
};

/// Minimizes 1/2 sum_Omega (u - z)^2 nu + lambda E_j(u) - lambda sum_boundary flux u nu,
/// E_j the weighted Dirichlet energy of the map on Q1 (gl) or Q2 (drov),
/// by accelerated gradient descent with backtracking and adaptive restart.
/// Requires a built-in (potential) map.
Field oracle_solve(const EllipticProblem& problem, const OracleOptions& options = {});

/// ||u||_{Omega} + (1/c)^{1/(p-1)} ||flux / m(Omega)||^{1/(p-1)} - ||u||_{boundary}.
double check_linf_boundary_bound(const Space& space, const Domain& domain, const LerayLionsMap& map,
                                 const SolveReport& report, const Field& flux);

}  // namespace mrws
