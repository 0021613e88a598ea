#include "mrws/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "mrws/kernels.hpp"

namespace mrws {

Space::Space(std::vector<double> nu, std::vector<std::vector<Transition>> rows,
             std::vector<std::string> labels)
    : nu_(std::move(nu)), labels_(std::move(labels)) {
  const std::size_t n = nu_.size();
  if (n == 0) throw InvalidInput("space must have at least one node");
  if (rows.size() != n) throw InvalidInput("rows and nu differ in length");
  if (!labels_.empty() && labels_.size() != n)
    throw InvalidInput("labels must be empty or one per node");

  offsets_.reserve(n + 1);
  offsets_.push_back(0);
  for (std::size_t x = 0; x < n; ++x) {
    if (!(nu_[x] > 0.0) || !std::isfinite(nu_[x]))
      throw InvalidInput("nu(" + std::to_string(x) + ") must be positive and finite");
    auto& row = rows[x];
    std::sort(row.begin(), row.end(),
              [](const Transition& a, const Transition& b) { return a.target < b.target; });
    double total = 0.0;
    for (std::size_t e = 0; e < row.size(); ++e) {
      if (row[e].target >= n) throw InvalidInput("row target out of range");
      if (e > 0 && row[e].target == row[e - 1].target)
        throw InvalidInput("duplicate target in row " + std::to_string(x));
      if (!(row[e].prob >= 0.0) || !std::isfinite(row[e].prob))
        throw InvalidInput("negative or non-finite probability in row " + std::to_string(x));
      total += row[e].prob;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw InvalidInput("row " + std::to_string(x) + " does not sum to one");
    entries_.insert(entries_.end(), row.begin(), row.end());
    offsets_.push_back(entries_.size());
  }
}

double Space::prob(NodeId x, NodeId y) const {
  const auto r = row(x);
  auto it = std::lower_bound(r.begin(), r.end(), y,
                             [](const Transition& t, NodeId v) { return t.target < v; });
  return (it != r.end() && it->target == y) ? it->prob : 0.0;
}

Space build_graph_space(std::span<const Edge> edges, std::size_t node_count,
                        std::vector<std::string> labels) {
  std::size_t n = node_count;
  for (const auto& e : edges) n = std::max<std::size_t>(n, std::max(e.a, e.b) + std::size_t{1});
  if (n == 0) throw InvalidInput("graph has no nodes");
  if (node_count != 0 && n > node_count) throw InvalidInput("edge endpoint exceeds node count");

  // Accumulate w_xy symmetrically; a loop contributes once to d_x.
  std::vector<std::vector<std::pair<NodeId, double>>> adj(n);
  for (const auto& e : edges) {
    if (!(e.w > 0.0) || !std::isfinite(e.w)) throw InvalidInput("edge weights must be positive");
    adj[e.a].emplace_back(e.b, e.w);
    if (e.a != e.b) adj[e.b].emplace_back(e.a, e.w);
  }

  std::vector<double> degree(n, 0.0);
  std::vector<std::vector<Transition>> rows(n);
  for (std::size_t x = 0; x < n; ++x) {
    auto& a = adj[x];
    std::sort(a.begin(), a.end());
    std::vector<std::pair<NodeId, double>> merged;
    for (const auto& [y, w] : a) {
      if (!merged.empty() && merged.back().first == y)
        merged.back().second += w;
      else
        merged.emplace_back(y, w);
    }
    double d = 0.0;
    for (const auto& [y, w] : merged) d += w;
    if (!(d > 0.0)) throw InvalidInput("isolated node " + std::to_string(x));
    degree[x] = d;
    rows[x].reserve(merged.size());
    for (const auto& [y, w] : merged) rows[x].push_back({y, w / d});
    a = std::move(merged);
  }

  // Connectivity by BFS.
  std::vector<char> seen(n, 0);
  std::queue<NodeId> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const NodeId x = frontier.front();
    frontier.pop();
    for (const auto& [y, w] : adj[x]) {
      if (!seen[y]) {
        seen[y] = 1;
        ++reached;
        frontier.push(y);
      }
    }
  }
  if (reached != n) throw InvalidInput("graph is disconnected");

  // Row sums of w/d can differ from 1 by rounding; renormalizing would break
  // the exact symmetry nu(x) m_x(y) = w_xy, so rows are kept as computed.
  return Space(std::move(degree), std::move(rows), std::move(labels));
}

std::function<double(double)> make_radial_profile(const KernelSpec& spec, int dim) {
  if (dim != 1 && dim != 2) throw InvalidInput("kernel dimension must be 1 or 2");
  if (!(spec.radius > 0.0)) throw InvalidInput("kernel radius must be positive");
  const double R = spec.radius;
  const double pi = std::acos(-1.0);
  switch (spec.type) {
    case KernelType::box: {
      const double height = spec.height > 0.0 ? spec.height : (dim == 1 ? 1.0 / (2.0 * R) : 1.0 / (pi * R * R));
      return [height, R](double r) { return r <= R ? height : 0.0; };
    }
    case KernelType::tent: {
      const double height = spec.height > 0.0 ? spec.height : (dim == 1 ? 1.0 / R : 3.0 / (pi * R * R));
      return [height, R](double r) { return r <= R ? height * (1.0 - r / R) : 0.0; };
    }
    case KernelType::gauss_trunc: {
      const double sigma = spec.sigma > 0.0 ? spec.sigma : R / 2.0;
      const double height = spec.height > 0.0
                                ? spec.height
                                : (dim == 1 ? 1.0 / (sigma * std::sqrt(2.0 * pi))
                                            : 1.0 / (2.0 * pi * sigma * sigma));
      return [height, sigma, R](double r) {
        return r <= R ? height * std::exp(-r * r / (2.0 * sigma * sigma)) : 0.0;
      };
    }
  }
  throw InvalidInput("unknown kernel type");
}

Space build_kernel_space(const GridSpec& grid, const std::function<double(double)>& profile,
                         double support_radius) {
  if (grid.dim != 1 && grid.dim != 2) throw InvalidInput("grid dimension must be 1 or 2");
  if (!(grid.h > 0.0)) throw InvalidInput("grid spacing must be positive");
  if (!(support_radius > 0.0)) throw InvalidInput("support radius must be positive");
  const std::size_t nx = grid.shape[0];
  const std::size_t ny = grid.dim == 1 ? 1 : grid.shape[1];
  if (nx == 0 || ny == 0) throw InvalidInput("grid shape must be positive");

  const double cell = grid.dim == 1 ? grid.h : grid.h * grid.h;
  const auto reach = static_cast<std::int64_t>(std::floor(support_radius / grid.h + 1e-9));
  const double tol_radius = support_radius * (1.0 + 1e-12);

  std::vector<Edge> edges;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const auto a = static_cast<NodeId>(i + nx * j);
      const std::int64_t dj_max = grid.dim == 1 ? 0 : reach;
      for (std::int64_t dj = 0; dj <= dj_max; ++dj) {
        for (std::int64_t di = -reach; di <= reach; ++di) {
          if (dj == 0 && di <= 0) continue;  // each unordered pair once, no r = 0
          const auto ii = static_cast<std::int64_t>(i) + di;
          const auto jj = static_cast<std::int64_t>(j) + dj;
          if (ii < 0 || ii >= static_cast<std::int64_t>(nx) || jj >= static_cast<std::int64_t>(ny))
            continue;
          const double r = grid.h * std::sqrt(static_cast<double>(di * di + dj * dj));
          if (r > tol_radius) continue;
          const double J = profile(r);
          if (!std::isfinite(J) || J < 0.0) throw InvalidInput("kernel evaluates negative");
          if (J == 0.0) continue;
          const auto b = static_cast<NodeId>(static_cast<std::size_t>(ii) + nx * static_cast<std::size_t>(jj));
          edges.push_back({a, b, J * cell});
        }
      }
    }
  }

  std::vector<char> touched(nx * ny, 0);
  for (const auto& e : edges) touched[e.a] = touched[e.b] = 1;
  if (std::find(touched.begin(), touched.end(), 0) != touched.end())
    throw InvalidInput("empty support: some grid point has no neighbor within the kernel radius");
  return build_graph_space(edges, nx * ny);
}

BalanceReport check_balance(const Space& space) {
  BalanceReport report;
  const std::size_t n = space.node_count();
  std::vector<double> inflow(n, 0.0);
  for (NodeId x = 0; x < n; ++x) {
    for (const auto& t : space.row(x)) {
      const double forward = space.nu(x) * t.prob;
      const double backward = space.nu(t.target) * space.prob(t.target, x);
      report.max_reversibility_violation =
          std::max(report.max_reversibility_violation, std::abs(forward - backward));
      inflow[t.target] += forward;
    }
  }
  for (NodeId x = 0; x < n; ++x)
    report.max_invariance_violation =
        std::max(report.max_invariance_violation, std::abs(space.nu(x) - inflow[x]));
  return report;
}

Domain m_boundary(const Space& space, std::span<const NodeId> omega, double epsilon) {
  if (omega.empty()) throw InvalidInput("omega must be nonempty");
  const std::size_t n = space.node_count();
  Domain d;
  d.epsilon_ = epsilon;
  d.omega_.assign(omega.begin(), omega.end());
  std::sort(d.omega_.begin(), d.omega_.end());
  d.omega_.erase(std::unique(d.omega_.begin(), d.omega_.end()), d.omega_.end());
  if (d.omega_.back() >= n) throw InvalidInput("omega node out of range");

  d.membership_.assign(n, Membership::outside);
  for (NodeId x : d.omega_) d.membership_[x] = Membership::omega;

  for (NodeId x = 0; x < n; ++x) {
    if (d.membership_[x] == Membership::omega) continue;
    double mass = 0.0;
    for (const auto& t : space.row(x))
      if (d.membership_[t.target] == Membership::omega) mass += t.prob;
    if (mass > epsilon) {
      d.membership_[x] = Membership::boundary;
      d.boundary_.push_back(x);
    }
  }

  d.local_of_.assign(n, -1);
  for (NodeId x = 0; x < n; ++x) {
    if (d.membership_[x] == Membership::outside) continue;
    d.local_of_[x] = static_cast<std::int64_t>(d.closure_.size());
    if (d.membership_[x] == Membership::omega)
      d.omega_rows_.push_back(d.closure_.size());
    else
      d.boundary_rows_.push_back(d.closure_.size());
    d.closure_.push_back(x);
  }

  d.offsets_.push_back(0);
  for (NodeId x : d.closure_) {
    double in_omega = 0.0;
    double leak = 0.0;
    for (const auto& t : space.row(x)) {
      const auto m = d.membership_[t.target];
      if (m == Membership::outside) {
        leak += t.prob;
        continue;
      }
      if (m == Membership::omega) in_omega += t.prob;
      d.targets_.push_back(static_cast<std::uint32_t>(d.local_of_[t.target]));
      d.probs_.push_back(t.prob);
    }
    d.offsets_.push_back(d.targets_.size());
    d.mass_in_omega_.push_back(in_omega);
    if (d.membership_[x] == Membership::omega)
      d.interior_leak_ = std::max(d.interior_leak_, leak);
  }
  return d;
}

double pair_integral(const Space& space, const Domain& domain, Region region,
                     const std::function<double(NodeId, NodeId)>& g) {
  std::vector<double> partial(space.node_count(), 0.0);
  kernels::pair_partials(space, domain, region, g, partial);
  return kernels::compensated_sum(partial);
}

}  // namespace mrws
