#include <cmath>

#include "mrws/kernels.hpp"
#include "row_kernels.hpp"

namespace mrws::kernels {

void row_sums_serial(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                     std::span<const std::size_t> rows, Targets targets, std::span<double> out) {
  for (std::size_t k = 0; k < rows.size(); ++k)
    out[k] = detail::row_sum(domain, map, u, rows[k], targets);
}

void row_jacobian_serial(const Domain& domain, const LerayLionsMap& map,
                         std::span<const double> u, std::span<const std::size_t> rows,
                         Targets targets, std::span<double> diag, std::span<double> offdiag) {
  for (std::size_t k = 0; k < rows.size(); ++k)
    detail::row_jacobian(domain, map, u, rows[k], targets, diag[k], offdiag);
}

void pair_partials_serial(const Space& space, const Domain& domain, Region region,
                          const PairFunction& g, std::span<double> out) {
  for (NodeId x = 0; x < space.node_count(); ++x)
    out[x] = detail::pair_row(space, domain, region, g, x);
}

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v))
    carry_ += (sum_ - t) + v;
  else
    carry_ += (v - t) + sum_;
  sum_ = t;
}

double compensated_sum(std::span<const double> values) {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace mrws::kernels
