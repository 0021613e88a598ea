#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mrws/space.hpp"
#include "mrws/types.hpp"

namespace mrws {

using ApFunction = std::function<double(NodeId, NodeId, double)>;

enum class ApKind { plaplacian, weighted, custom };

/// The Leray-Lions integrand a_p(x, y, r) with its structural constants.
///
/// Built-in maps are potential maps: a_p(x, y, r) = omega(x, y) |r|^{p-2} r
/// with a symmetric pair weight omega, which is what the convex oracle and
/// the energy functionals rely on. Custom maps go through verify_structure.
struct LerayLionsMap {
  double p = 2.0;
  double c = 1.0;  // coercivity: a(x,y,r) r >= c |r|^p
  double C = 1.0;  // growth:     |a(x,y,r)| <= C (1 + |r|^{p-1})
  ApFunction eval;
  ApFunction deriv_r;  // optional; empty means "use finite differences"
  bool positively_homogeneous = false;
  ApKind kind = ApKind::custom;
  std::vector<double> phi;  // per-node weights, weighted kind only

  double operator()(NodeId x, NodeId y, double r) const { return eval(x, y, r); }

  /// d/dr a(x, y, r): deriv_r when present, else a central difference with
  /// step 1e-6 (1 + |r|).
  double derivative(NodeId x, NodeId y, double r) const;

  /// Symmetric pair weight omega(x, y) of a potential map.
  /// Throws InvalidInput for custom maps.
  double pair_weight(NodeId x, NodeId y) const;

  bool is_potential() const { return kind != ApKind::custom; }
};

/// a(x, y, r) = |r|^{p-2} r, c = C = 1.
LerayLionsMap make_plaplacian(double p);

/// a(x, y, r) = ((phi(x) + phi(y)) / 2) |r|^{p-2} r, c = min phi, C = max phi.
LerayLionsMap make_weighted_plaplacian(double p, std::vector<double> phi);

/// Regularization used by the built-in derivatives when p < 2:
/// (p - 1) (r^2 + delta^2)^{(p-2)/2}.
inline constexpr double kDerivativeDelta = 1e-12;

/// Max residuals of the structural conditions over random samples.
/// Each defect is clamped at 0 and ignores differences within a few ulps
/// of the compared magnitudes.
struct StructureReport {
  double antisymmetry_violation = 0.0;
  double monotonicity_violation = 0.0;
  double growth_violation = 0.0;
  double coercivity_violation = 0.0;
  std::int64_t samples_used = 0;

  bool clean() const {
    return antisymmetry_violation == 0.0 && monotonicity_violation == 0.0 &&
           growth_violation == 0.0 && coercivity_violation == 0.0;
  }
};

/// Samples (x, y) from the support of nu (x) m_x and (r, s) from a
/// log-uniform magnitude range including exact zeros. Deterministic in seed.
StructureReport verify_structure(const LerayLionsMap& map, const Space& space,
                                 std::int64_t n_samples, std::uint64_t seed);

}  // namespace mrws
