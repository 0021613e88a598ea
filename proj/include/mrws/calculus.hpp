#pragma once

#include <span>
#include <vector>

#include "mrws/field.hpp"
#include "mrws/leray_lions.hpp"
#include "mrws/space.hpp"

namespace mrws {

/// u(y) - u(x). Throws std::out_of_range when x or y is outside u's support.
double nonlocal_gradient(const Field& u, NodeId x, NodeId y);

/// div_m a_p u(x) = sum_{y in closure} a(x, y, u(y) - u(x)) m_x({y}) for x in `at`.
/// `at` must be a sorted subset of Omega; u must cover the closure.
Field m_divergence(const Space& space, const Domain& domain, const LerayLionsMap& map,
                   const Field& u, std::span<const NodeId> at);

/// The two-point form 1/2 sum_y (z(x,y) - z(y,x)) m_x({y}) with
/// z(x, y) = a(x, y, u(y) - u(x)), over y in the closure. Agrees with
/// m_divergence whenever a is antisymmetric; kept as a cross-check.
Field m_divergence_symmetric(const Space& space, const Domain& domain, const LerayLionsMap& map,
                             const Field& u, std::span<const NodeId> at);

/// Neumann flux on the boundary:
///   gl:   -sum_{y in closure} a(x, y, u(y) - u(x)) m_x({y})
///   drov: -sum_{y in Omega}   a(x, y, u(y) - u(x)) m_x({y})
Field neumann_flux(const Space& space, const Domain& domain, const LerayLionsMap& map,
                   const Field& u, Variant variant);

/// Integration region paired with each boundary operator (Q1 for gl, Q2 for drov).
inline Region variant_region(Variant v) { return v == Variant::gl ? Region::q1 : Region::q2; }

struct IdentityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_gap = 0.0;
};

struct GreenReport {
  IdentityReport ibp;
  IdentityReport divergence;
};

/// Integration by parts:
///   -sum_Omega div(u) w nu + sum_boundary N_j(u) w nu
///     = 1/2 sum_{Q_j} a(x, y, grad u) grad w  d(nu (x) m_x)
/// and the divergence theorem (w = 1):
///   sum_Omega div(u) nu = sum_boundary N_j(u) nu.
GreenReport check_greens_identities(const Space& space, const Domain& domain,
                                    const LerayLionsMap& map, const Field& u, const Field& w,
                                    Variant variant);

/// (1/(2p)) sum_{Q_j} |u(y) - u(x)|^p d(nu (x) m_x). For p = 2 and gl this is
/// 1/4 of the Q1 Dirichlet form.
double dirichlet_energy(const Space& space, const Domain& domain, const Field& u, double p,
                        Variant variant);

/// Same with the pair weight of a potential map:
/// (1/(2p)) sum_{Q_j} omega(x, y) |u(y) - u(x)|^p. Its first variation is
/// -div and N_j of that map.
double dirichlet_energy(const Space& space, const Domain& domain, const LerayLionsMap& map,
                        const Field& u, Variant variant);

namespace local {

// Closure-local evaluators used by the solvers. `u` has one value per
// closure node; outputs follow domain.omega_rows() / boundary_rows().

/// div_m a_p u at every Omega row.
std::vector<double> divergence(const Domain& domain, const LerayLionsMap& map,
                               std::span<const double> u);

/// N_j u at every boundary row.
std::vector<double> neumann_flux(const Domain& domain, const LerayLionsMap& map,
                                 std::span<const double> u, Variant variant);

/// sum over `rows` of values[k] * nu(closure[rows[k]]), compensated.
double weighted_sum(const Space& space, const Domain& domain, std::span<const std::size_t> rows,
                    std::span<const double> values);

}  // namespace local

}  // namespace mrws
