// Serial vs OpenMP timing of the row kernels on a 2D kernel space.
// Usage: bench_kernels [grid_side] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "mrws/calculus.hpp"
#include "mrws/kernels.hpp"
#include "mrws/leray_lions.hpp"
#include "mrws/space.hpp"

using namespace mrws;

namespace {

template <class F>
double seconds(int repeats, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeats;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t side = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 160;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 20;

  GridSpec grid;
  grid.dim = 2;
  grid.shape = {side, side};
  grid.h = 1.0 / static_cast<double>(side);
  KernelSpec spec;
  spec.type = KernelType::tent;
  spec.radius = 4.0 * grid.h;
  const Space space = build_kernel_space(grid, make_radial_profile(spec, 2), spec.radius);

  std::vector<NodeId> omega;
  for (std::size_t j = 8; j + 8 < side; ++j)
    for (std::size_t i = 8; i + 8 < side; ++i) omega.push_back(static_cast<NodeId>(i + side * j));
  const Domain domain = m_boundary(space, omega);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> u(domain.size());
  for (double& v : u) v = uni(rng);
  const auto map = make_plaplacian(3.0);
  const auto rows = domain.omega_rows();
  std::vector<double> out_s(rows.size()), out_p(rows.size());
  std::vector<double> diag(rows.size()), off(domain.targets().size());

  std::printf("nodes=%zu closure=%zu entries=%zu threads=%d\n", space.node_count(), domain.size(),
              domain.targets().size(), omp_get_max_threads());
  const double ts = seconds(repeats, [&] {
    kernels::row_sums_serial(domain, map, u, rows, kernels::Targets::closure, out_s);
  });
  const double tp = seconds(repeats, [&] {
    kernels::row_sums_omp(domain, map, u, rows, kernels::Targets::closure, out_p);
  });
  std::printf("row_sums      serial %.3e s  omp %.3e s  speedup %.2f  identical=%d\n", ts, tp, ts / tp,
              out_s == out_p);
  const double js = seconds(repeats, [&] {
    kernels::row_jacobian_serial(domain, map, u, rows, kernels::Targets::closure, diag, off);
  });
  const double jp = seconds(repeats, [&] {
    kernels::row_jacobian_omp(domain, map, u, rows, kernels::Targets::closure, diag, off);
  });
  std::printf("row_jacobian  serial %.3e s  omp %.3e s  speedup %.2f\n", js, jp, js / jp);

  std::vector<double> ps(space.node_count()), pp(space.node_count());
  auto g = [&](NodeId x, NodeId y) {
    const double d = u[static_cast<std::size_t>(domain.local(y))] - u[static_cast<std::size_t>(domain.local(x))];
    return d * d;
  };
  const double qs = seconds(repeats, [&] { kernels::pair_partials_serial(space, domain, Region::q1, g, ps); });
  const double qp = seconds(repeats, [&] { kernels::pair_partials_omp(space, domain, Region::q1, g, pp); });
  std::printf("pair_partials serial %.3e s  omp %.3e s  speedup %.2f  identical=%d\n", qs, qp, qs / qp,
              ps == pp);
  return 0;
}
