#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cstdint>

#include "mrws/kernels.hpp"
#include "row_kernels.hpp"

namespace mrws::kernels {

namespace {
std::atomic<Exec> g_default_exec{Exec::parallel};

// Below this many rows the fork/join cost dominates.
constexpr std::size_t kMinParallelRows = 256;

bool run_parallel(Exec exec, std::size_t rows) {
  return exec == Exec::parallel && rows >= kMinParallelRows && omp_get_max_threads() > 1;
}
}  // namespace

Exec default_exec() { return g_default_exec.load(); }
void set_default_exec(Exec exec) { g_default_exec.store(exec); }

int set_threads(int n) {
  if (n >= 1) omp_set_num_threads(n);
  const int effective = omp_get_max_threads();
  set_default_exec(effective > 1 ? Exec::parallel : Exec::serial);
  return effective;
}

void row_sums_omp(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                  std::span<const std::size_t> rows, Targets targets, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n; ++k)
    out[k] = detail::row_sum(domain, map, u, rows[k], targets);
}

void row_jacobian_omp(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                      std::span<const std::size_t> rows, Targets targets, std::span<double> diag,
                      std::span<double> offdiag) {
  const auto n = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < n; ++k)
    detail::row_jacobian(domain, map, u, rows[k], targets, diag[k], offdiag);
}

void pair_partials_omp(const Space& space, const Domain& domain, Region region,
                       const PairFunction& g, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(space.node_count());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t x = 0; x < n; ++x)
    out[x] = detail::pair_row(space, domain, region, g, static_cast<NodeId>(x));
}

void row_sums(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
              std::span<const std::size_t> rows, Targets targets, std::span<double> out, Exec exec) {
  if (run_parallel(exec, rows.size()))
    row_sums_omp(domain, map, u, rows, targets, out);
  else
    row_sums_serial(domain, map, u, rows, targets, out);
}

void row_jacobian(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                  std::span<const std::size_t> rows, Targets targets, std::span<double> diag,
                  std::span<double> offdiag, Exec exec) {
  if (run_parallel(exec, rows.size()))
    row_jacobian_omp(domain, map, u, rows, targets, diag, offdiag);
  else
    row_jacobian_serial(domain, map, u, rows, targets, diag, offdiag);
}

void pair_partials(const Space& space, const Domain& domain, Region region, const PairFunction& g,
                   std::span<double> out, Exec exec) {
  if (run_parallel(exec, space.node_count()))
    pair_partials_omp(space, domain, region, g, out);
  else
    pair_partials_serial(space, domain, region, g, out);
}

}  // namespace mrws::kernels
