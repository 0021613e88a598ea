#pragma once

#include <cstdint>
#include <vector>

#include "mrws/field.hpp"
#include "mrws/space.hpp"

namespace mrws {

struct PoincareReport {
  double p = 2.0;
  double lambda_best = 0.0;  // sup of the ratio (exact) or a witnessed lower bound
  Field extremal;            // on the closure (boundary for the boundary version)
  bool exact = false;
};

/// sup over nonconstant u of ||u - mean_Omega u||_{L^2(closure, nu)} / |u|_{Q1},
/// |u|_{Q1}^2 = sum_{Q1} (u(y) - u(x))^2 d(nu (x) m_x), from the generalized
/// symmetric eigenproblem on the complement of the constants.
PoincareReport poincare_p2(const Space& space, const Domain& domain);

/// Ratio ||u - mean_Omega u||_{L^p(closure, nu)} / |u|_{Q1,p} of one field.
double poincare_ratio(const Space& space, const Domain& domain, const Field& u, double p);

/// Lower bound on the general-p constant: best ratio over 20 random starts
/// and the 5 node indicators least likely to be left by the walk, each
/// improved by `iterations` steps of projected, backtracking ascent.
PoincareReport poincare_probe(const Space& space, const Domain& domain, double p, int iterations,
                              std::uint64_t seed);

/// The same eigen-solve on the boundary alone: norm, mean and seminorm all
/// over the boundary (seminorm on boundary x boundary).
PoincareReport boundary_poincare_p2(const Space& space, const Domain& domain);

/// Ratio of the boundary inequality for one field on the boundary.
double boundary_poincare_ratio(const Space& space, const Domain& domain, const Field& u);

/// Truncated star x_0, ..., x_N with w(x_0, x_n) = 7^-n and self-loops
/// w(x_n, x_n) = 3^-n - 7^-n; Omega = {x_0}.
struct Counterexample {
  Space space;
  std::vector<NodeId> omega;
  Domain domain;
  Field u;     // closure: u(x_0) = 0, u(x_n) = 2^{n/(p-1)}
  Field v;     // Omega: u - div_m a_p u at x_0
  Field flux;  // boundary: u(x_n)^{p-1} m_{x_n}({x_0})
};

/// N in [1, 40]; deeper levels fall below the default boundary threshold.
Counterexample build_counterexample(int levels, double p);

/// -(12/5) (1 - (2/7)^N) / (1 - 7^-N): v(x_0) of the truncated star.
double counterexample_v_closed_form(int levels);

/// min over samples w of F(w) - F(u) - sum_Omega v (w - u) nu with F the p = 2
/// gl Dirichlet energy; each w is re-extended to the boundary through its own
/// homogeneous boundary equations. Throws InvalidInput if (u, v) does not
/// satisfy the homogeneous p = 2 system within 1e-10.
double subdifferential_gap_p2(const Space& space, const Domain& domain, const Field& u,
                              const Field& v, const std::vector<Field>& w_samples);

/// sum_Omega d^2 nu - [sum_boundary m_x(Omega) d^2 nu + sum_{bd x bd} (d(y) - d(x))^2]
/// with d = u1 - u2. Both fields must satisfy the homogeneous p = 2 boundary
/// relation within 1e-10 (InvalidInput otherwise).
double boundary_contraction_check(const Space& space, const Domain& domain, const Field& u1,
                                  const Field& u2);

/// max over boundary nodes with flux != 0 of |flux| / m_x(Omega); +inf when
/// such a node has m_x(Omega) <= the boundary threshold.
double lm_infinity_norm(const Space& space, const Domain& domain, const Field& flux);

}  // namespace mrws
