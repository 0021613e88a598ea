#include "mrws/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "mrws/kernels.hpp"

namespace mrws {

namespace {

std::vector<std::size_t> omega_rows_for(const Domain& domain, std::span<const NodeId> at) {
  std::vector<std::size_t> rows;
  rows.reserve(at.size());
  for (NodeId x : at) {
    if (x >= domain.memberships().size() || domain.membership(x) != Membership::omega)
      throw InvalidInput("divergence requested outside Omega at node " + std::to_string(x));
    rows.push_back(static_cast<std::size_t>(domain.local(x)));
  }
  return rows;
}

kernels::Targets flux_targets(Variant v) {
  return v == Variant::gl ? kernels::Targets::closure : kernels::Targets::omega;
}

}  // namespace

double nonlocal_gradient(const Field& u, NodeId x, NodeId y) { return u.at(y) - u.at(x); }

Field m_divergence(const Space&, const Domain& domain, const LerayLionsMap& map, const Field& u,
                   std::span<const NodeId> at) {
  const auto values = closure_values(domain, u);
  const auto rows = omega_rows_for(domain, at);
  std::vector<double> out(rows.size());
  kernels::row_sums(domain, map, values, rows, kernels::Targets::closure, out);
  return Field({at.begin(), at.end()}, std::move(out));
}

Field m_divergence_symmetric(const Space&, const Domain& domain, const LerayLionsMap& map,
                             const Field& u, std::span<const NodeId> at) {
  const auto values = closure_values(domain, u);
  const auto rows = omega_rows_for(domain, at);
  const auto off = domain.offsets();
  const auto tgt = domain.targets();
  const auto prob = domain.probs();
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) {
    const NodeId x = domain.global(i);
    double acc = 0.0;
    for (std::size_t e = off[i]; e < off[i + 1]; ++e) {
      const std::size_t j = tgt[e];
      const NodeId y = domain.global(j);
      const double forward = map.eval(x, y, values[j] - values[i]);
      const double backward = map.eval(y, x, values[i] - values[j]);
      acc += 0.5 * (forward - backward) * prob[e];
    }
    out.push_back(acc);
  }
  return Field({at.begin(), at.end()}, std::move(out));
}

Field neumann_flux(const Space&, const Domain& domain, const LerayLionsMap& map, const Field& u,
                   Variant variant) {
  const auto values = closure_values(domain, u);
  auto flux = local::neumann_flux(domain, map, values, variant);
  return Field({domain.boundary().begin(), domain.boundary().end()}, std::move(flux));
}

GreenReport check_greens_identities(const Space& space, const Domain& domain,
                                    const LerayLionsMap& map, const Field& u, const Field& w,
                                    Variant variant) {
  const auto uv = closure_values(domain, u);
  const auto wv = closure_values(domain, w);
  const auto div = local::divergence(domain, map, uv);
  const auto flux = local::neumann_flux(domain, map, uv, variant);

  kernels::CompensatedSum lhs;
  kernels::CompensatedSum div_total;
  kernels::CompensatedSum flux_total;
  const auto omega_rows = domain.omega_rows();
  const auto boundary_rows = domain.boundary_rows();
  for (std::size_t k = 0; k < omega_rows.size(); ++k) {
    const std::size_t i = omega_rows[k];
    const double nu = space.nu(domain.global(i));
    lhs.add(-div[k] * wv[i] * nu);
    div_total.add(div[k] * nu);
  }
  for (std::size_t k = 0; k < boundary_rows.size(); ++k) {
    const std::size_t i = boundary_rows[k];
    const double nu = space.nu(domain.global(i));
    lhs.add(flux[k] * wv[i] * nu);
    flux_total.add(flux[k] * nu);
  }

  const double rhs = 0.5 * pair_integral(space, domain, variant_region(variant), [&](NodeId x, NodeId y) {
                       const auto i = static_cast<std::size_t>(domain.local(x));
                       const auto j = static_cast<std::size_t>(domain.local(y));
                       return map.eval(x, y, uv[j] - uv[i]) * (wv[j] - wv[i]);
                     });

  GreenReport report;
  report.ibp = {lhs.value(), rhs, std::abs(lhs.value() - rhs)};
  report.divergence = {div_total.value(), flux_total.value(),
                       std::abs(div_total.value() - flux_total.value())};
  return report;
}

double dirichlet_energy(const Space& space, const Domain& domain, const Field& u, double p,
                        Variant variant) {
  if (!(p > 1.0)) throw InvalidInput("p must be > 1");
  const auto uv = closure_values(domain, u);
  const double total = pair_integral(space, domain, variant_region(variant), [&](NodeId x, NodeId y) {
    const double g = uv[static_cast<std::size_t>(domain.local(y))] - uv[static_cast<std::size_t>(domain.local(x))];
    return std::pow(std::abs(g), p);
  });
  return total / (2.0 * p);
}

double dirichlet_energy(const Space& space, const Domain& domain, const LerayLionsMap& map,
                        const Field& u, Variant variant) {
  const auto uv = closure_values(domain, u);
  const double p = map.p;
  const double total = pair_integral(space, domain, variant_region(variant), [&](NodeId x, NodeId y) {
    const double g = uv[static_cast<std::size_t>(domain.local(y))] - uv[static_cast<std::size_t>(domain.local(x))];
    return map.pair_weight(x, y) * std::pow(std::abs(g), p);
  });
  return total / (2.0 * p);
}

namespace local {

std::vector<double> divergence(const Domain& domain, const LerayLionsMap& map,
                               std::span<const double> u) {
  std::vector<double> out(domain.omega_rows().size());
  kernels::row_sums(domain, map, u, domain.omega_rows(), kernels::Targets::closure, out);
  return out;
}

std::vector<double> neumann_flux(const Domain& domain, const LerayLionsMap& map,
                                 std::span<const double> u, Variant variant) {
  std::vector<double> out(domain.boundary_rows().size());
  kernels::row_sums(domain, map, u, domain.boundary_rows(), flux_targets(variant), out);
  for (double& v : out) v = -v;
  return out;
}

double weighted_sum(const Space& space, const Domain& domain, std::span<const std::size_t> rows,
                    std::span<const double> values) {
  kernels::CompensatedSum acc;
  for (std::size_t k = 0; k < rows.size(); ++k) acc.add(values[k] * space.nu(domain.global(rows[k])));
  return acc.value();
}

}  // namespace local

}  // namespace mrws
