#pragma once

// Per-row bodies shared by the serial and OpenMP kernels. Keeping a single
// definition guarantees both paths perform the same floating-point operations.

#include <cstddef>
#include <span>

#include "mrws/kernels.hpp"
#include "region.hpp"

namespace mrws::kernels::detail {

inline bool target_allowed(const Domain& domain, Targets targets, std::uint32_t j) {
  return targets == Targets::closure || domain.local_in_omega(j);
}

inline double row_sum(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                      std::size_t i, Targets targets) {
  const auto off = domain.offsets();
  const auto tgt = domain.targets();
  const auto prob = domain.probs();
  const NodeId x = domain.global(i);
  double acc = 0.0;
  for (std::size_t e = off[i]; e < off[i + 1]; ++e) {
    const std::uint32_t j = tgt[e];
    if (!target_allowed(domain, targets, j)) continue;
    acc += map.eval(x, domain.global(j), u[j] - u[i]) * prob[e];
  }
  return acc;
}

inline void row_jacobian(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                         std::size_t i, Targets targets, double& diag, std::span<double> offdiag) {
  const auto off = domain.offsets();
  const auto tgt = domain.targets();
  const auto prob = domain.probs();
  const NodeId x = domain.global(i);
  double d = 0.0;
  for (std::size_t e = off[i]; e < off[i + 1]; ++e) {
    const std::uint32_t j = tgt[e];
    if (j == i || !target_allowed(domain, targets, j)) {
      offdiag[e] = 0.0;
      continue;
    }
    const double slope = map.derivative(x, domain.global(j), u[j] - u[i]) * prob[e];
    offdiag[e] = slope;
    d -= slope;
  }
  diag = d;
}

inline double pair_row(const Space& space, const Domain& domain, Region region,
                       const PairFunction& g, NodeId x) {
  const Membership mx = domain.membership(x);
  if (region != Region::all && mx == Membership::outside) return 0.0;
  CompensatedSum acc;
  for (const auto& t : space.row(x)) {
    if (!mrws::detail::region_includes(region, mx, domain.membership(t.target))) continue;
    acc.add(g(x, t.target) * t.prob);
  }
  return acc.value() * space.nu(x);
}

}  // namespace mrws::kernels::detail
