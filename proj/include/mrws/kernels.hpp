#pragma once

// Row kernels shared by every operator. Each kernel has a serial reference
// implementation and an OpenMP implementation. Both write one output slot per
// row and never reduce across rows, so their results are bit-identical; any
// cross-row sum is done afterwards, sequentially, by the caller.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mrws/leray_lions.hpp"
#include "mrws/space.hpp"

namespace mrws::kernels {

enum class Exec { serial, parallel };

/// Process-wide default used by the operator layer. `parallel` falls back
/// to the serial code path when OpenMP runs a single thread.
Exec default_exec();
void set_default_exec(Exec exec);

/// Sets the OpenMP thread count and picks the matching default Exec
/// (serial for n == 1). Returns the effective thread count.
int set_threads(int n);

/// Which closure targets a row sum runs over.
enum class Targets { closure, omega };

/// out[k] = sum_{y in T} a(x, y, u(y) - u(x)) m_x({y}) for x = rows[k],
/// with u and rows in closure-local indexing.
void row_sums_serial(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                     std::span<const std::size_t> rows, Targets targets, std::span<double> out);
void row_sums_omp(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                  std::span<const std::size_t> rows, Targets targets, std::span<double> out);

/// Partial derivatives of the row sums above. For x = rows[k]:
///   diag[k]      = d(row sum)/du(x)
///   offdiag[e]   = d(row sum)/du(target of CSR entry e), for every entry e
///                  of that row (0 for excluded targets and self-loops).
void row_jacobian_serial(const Domain& domain, const LerayLionsMap& map,
                         std::span<const double> u, std::span<const std::size_t> rows,
                         Targets targets, std::span<double> diag, std::span<double> offdiag);
void row_jacobian_omp(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                      std::span<const std::size_t> rows, Targets targets, std::span<double> diag,
                      std::span<double> offdiag);

using PairFunction = std::function<double(NodeId, NodeId)>;

/// out[x] = sum over row x of g(x, y) nu(x) m_x({y}) restricted to region,
/// for every node x of the space (0 for rows outside the region).
void pair_partials_serial(const Space& space, const Domain& domain, Region region,
                          const PairFunction& g, std::span<double> out);
void pair_partials_omp(const Space& space, const Domain& domain, Region region,
                       const PairFunction& g, std::span<double> out);

// Dispatchers.
void row_sums(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
              std::span<const std::size_t> rows, Targets targets, std::span<double> out,
              Exec exec = default_exec());
void row_jacobian(const Domain& domain, const LerayLionsMap& map, std::span<const double> u,
                  std::span<const std::size_t> rows, Targets targets, std::span<double> diag,
                  std::span<double> offdiag, Exec exec = default_exec());
void pair_partials(const Space& space, const Domain& domain, Region region, const PairFunction& g,
                   std::span<double> out, Exec exec = default_exec());

/// Neumaier-compensated sum, used for every cross-row reduction.
double compensated_sum(std::span<const double> values);

class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace mrws::kernels
