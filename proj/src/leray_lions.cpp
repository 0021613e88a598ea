#include "mrws/leray_lions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

namespace mrws {

namespace {

double signed_power(double r, double exponent) {
  return r == 0.0 ? 0.0 : std::pow(std::abs(r), exponent) * (r > 0.0 ? 1.0 : -1.0);
}

// d/dr |r|^{p-2} r, regularized at r = 0 when p < 2.
double power_derivative(double r, double p) {
  if (p == 2.0) return 1.0;
  if (p < 2.0) return (p - 1.0) * std::pow(r * r + kDerivativeDelta * kDerivativeDelta, 0.5 * (p - 2.0));
  return (p - 1.0) * std::pow(std::abs(r), p - 2.0);
}

// Few-ulp allowance so closed-form identities evaluated with different
// rounding orders do not register as defects.
double rounding_floor(double magnitude) {
  return 8.0 * std::numeric_limits<double>::epsilon() * std::abs(magnitude);
}

}  // namespace

double LerayLionsMap::derivative(NodeId x, NodeId y, double r) const {
  if (deriv_r) return deriv_r(x, y, r);
  const double h = 1e-6 * (1.0 + std::abs(r));
  return (eval(x, y, r + h) - eval(x, y, r - h)) / (2.0 * h);
}

double LerayLionsMap::pair_weight(NodeId x, NodeId y) const {
  switch (kind) {
    case ApKind::plaplacian:
      return 1.0;
    case ApKind::weighted:
      return 0.5 * (phi[x] + phi[y]);
    case ApKind::custom:
      break;
  }
  throw InvalidInput("pair weight requested for a map without a known potential");
}

LerayLionsMap make_plaplacian(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidInput("p must be > 1");
  LerayLionsMap map;
  map.p = p;
  map.c = 1.0;
  map.C = 1.0;
  map.kind = ApKind::plaplacian;
  map.positively_homogeneous = true;
  const double e = p - 1.0;
  if (p == 2.0)
    map.eval = [](NodeId, NodeId, double r) { return r; };
  else
    map.eval = [e](NodeId, NodeId, double r) { return signed_power(r, e); };
  map.deriv_r = [p](NodeId, NodeId, double r) { return power_derivative(r, p); };
  return map;
}

LerayLionsMap make_weighted_plaplacian(double p, std::vector<double> phi) {
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidInput("p must be > 1");
  if (phi.empty()) throw InvalidInput("phi must be nonempty");
  for (double v : phi)
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("phi must be strictly positive and finite");
  LerayLionsMap map;
  map.p = p;
  map.c = *std::min_element(phi.begin(), phi.end());
  map.C = *std::max_element(phi.begin(), phi.end());
  map.kind = ApKind::weighted;
  map.positively_homogeneous = true;
  map.phi = std::move(phi);
  auto weights = std::make_shared<const std::vector<double>>(map.phi);
  const double e = p - 1.0;
  map.eval = [weights, e](NodeId x, NodeId y, double r) {
    return 0.5 * ((*weights)[x] + (*weights)[y]) * signed_power(r, e);
  };
  map.deriv_r = [weights, p](NodeId x, NodeId y, double r) {
    return 0.5 * ((*weights)[x] + (*weights)[y]) * power_derivative(r, p);
  };
  return map;
}

StructureReport verify_structure(const LerayLionsMap& map, const Space& space,
                                 std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw InvalidInput("n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_node(0, space.node_count() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_r = [&]() {
    if (unit(rng) < 0.1) return 0.0;
    const double magnitude = std::pow(10.0, -3.0 + 6.0 * unit(rng));
    return unit(rng) < 0.5 ? -magnitude : magnitude;
  };

  StructureReport report;
  const double p = map.p;
  for (std::int64_t k = 0; k < n_samples; ++k) {
    const auto x = static_cast<NodeId>(pick_node(rng));
    const auto row = space.row(x);
    std::uniform_int_distribution<std::size_t> pick_entry(0, row.size() - 1);
    const NodeId y = row[pick_entry(rng)].target;
    const double r = draw_r();
    double s = draw_r();
    if (s == r) s = r + 1.0;

    const double ar = map.eval(x, y, r);
    const double as = map.eval(x, y, s);
    const double a_rev = map.eval(y, x, -r);

    const double anti = std::abs(ar + a_rev) - rounding_floor(std::max(std::abs(ar), std::abs(a_rev)));
    report.antisymmetry_violation = std::max(report.antisymmetry_violation, std::max(0.0, anti));

    const double mono = -(ar - as) * (r - s) - rounding_floor((std::abs(ar) + std::abs(as)) * std::abs(r - s));
    report.monotonicity_violation = std::max(report.monotonicity_violation, std::max(0.0, mono));

    const double bound = map.C * (1.0 + std::pow(std::abs(r), p - 1.0));
    const double growth = std::abs(ar) - bound - rounding_floor(bound);
    report.growth_violation = std::max(report.growth_violation, std::max(0.0, growth));

    const double floor = map.c * std::pow(std::abs(r), p);
    const double coercive = floor - ar * r - rounding_floor(floor);
    report.coercivity_violation = std::max(report.coercivity_violation, std::max(0.0, coercive));
  }
  report.samples_used = n_samples;
  return report;
}

}  // namespace mrws
