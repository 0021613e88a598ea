#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mrws/types.hpp"

namespace mrws {

/// One jump of the random walk: m_x({target}) = prob.
struct Transition {
  NodeId target;
  double prob;
  bool operator==(const Transition&) const = default;
};

/// Finite metric random walk space [X, d, m] together with its invariant
/// measure nu. Rows are stored in CSR form, sorted by target. Immutable.
class Space {
 public:
  /// Validates: nu > 0, probabilities >= 0, each row sums to 1 within 1e-12,
  /// targets in range and unique per row.
  Space(std::vector<double> nu, std::vector<std::vector<Transition>> rows,
        std::vector<std::string> labels = {});

  std::size_t node_count() const { return nu_.size(); }
  double nu(NodeId x) const { return nu_[x]; }
  std::span<const double> nu() const { return nu_; }
  std::span<const Transition> row(NodeId x) const {
    return {entries_.data() + offsets_[x], entries_.data() + offsets_[x + 1]};
  }
  /// m_x({y}); zero when y is not in the support of m_x.
  double prob(NodeId x, NodeId y) const;
  std::size_t entry_count() const { return entries_.size(); }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::string label(NodeId x) const { return labels_.empty() ? std::string{} : labels_[x]; }

 private:
  std::vector<double> nu_;
  std::vector<std::size_t> offsets_;
  std::vector<Transition> entries_;
  std::vector<std::string> labels_;
};

/// Undirected weighted edge. Self-loops (a == b) are allowed.
struct Edge {
  NodeId a;
  NodeId b;
  double w;
};

/// Random walk of a weighted graph: nu(x) = d_x = sum_y w_xy and
/// m_x = sum_y (w_xy / d_x) delta_y. Each undirected edge is listed once;
/// repeated listings of the same pair accumulate.
/// Throws InvalidInput on nonpositive weights, isolated nodes or a
/// disconnected graph. `node_count == 0` infers it from the edges.
Space build_graph_space(std::span<const Edge> edges, std::size_t node_count = 0,
                        std::vector<std::string> labels = {});

/// Uniform 1D/2D grid. Node index is i + shape[0] * j (row-major in x).
struct GridSpec {
  int dim = 1;
  std::array<std::size_t, 2> shape{1, 1};
  double h = 1.0;
  std::array<double, 2> origin{0.0, 0.0};

  std::size_t point_count() const { return dim == 1 ? shape[0] : shape[0] * shape[1]; }
};

enum class KernelType { box, tent, gauss_trunc };

/// Radially symmetric kernel profile J(|z|) with compact support.
/// A non-positive `height` selects the normalization of the untruncated
/// continuum kernel (integral one in the given dimension).
struct KernelSpec {
  KernelType type = KernelType::box;
  double radius = 1.0;
  double height = 0.0;
  double sigma = 0.0;  // gauss_trunc only; <= 0 means radius / 2
};

/// J as a function of the distance r, for the given dimension.
std::function<double(double)> make_radial_profile(const KernelSpec& spec, int dim);

/// Midpoint-quadrature realization of the kernel walk m^J on a grid:
/// w_xy = J(|x - y|) h^dim for distinct grid points within support_radius,
/// then handed to build_graph_space. The r = 0 point is never included.
Space build_kernel_space(const GridSpec& grid, const std::function<double(double)>& profile,
                         double support_radius);

/// Residuals of detailed balance and invariance for the stored nu.
struct BalanceReport {
  double max_reversibility_violation = 0.0;
  double max_invariance_violation = 0.0;
};

BalanceReport check_balance(const Space& space);

/// Default floating-point proxy for "m_x(Omega) > 0".
inline constexpr double kDefaultBoundaryEpsilon = 1e-15;

enum class Membership : std::uint8_t { outside = 0, omega = 1, boundary = 2 };

/// Omega together with its m-boundary and m-closure, plus closure-local
/// CSR rows (targets restricted to the closure) used by all operators.
///
/// Closure-local index i refers to closure()[i]. The closure is sorted by
/// global node id, so Omega and boundary nodes interleave.
class Domain {
 public:
  std::span<const NodeId> omega() const { return omega_; }
  std::span<const NodeId> boundary() const { return boundary_; }
  std::span<const NodeId> closure() const { return closure_; }
  double interior_leak() const { return interior_leak_; }
  double epsilon() const { return epsilon_; }

  std::size_t size() const { return closure_.size(); }
  Membership membership(NodeId x) const { return membership_[x]; }
  std::span<const Membership> memberships() const { return membership_; }
  /// Closure-local index of x, or -1 when x is outside the closure.
  std::int64_t local(NodeId x) const { return local_of_[x]; }
  NodeId global(std::size_t i) const { return closure_[i]; }
  bool local_in_omega(std::size_t i) const { return membership_[closure_[i]] == Membership::omega; }

  /// Closure-local indices of Omega and of the boundary, in closure order.
  std::span<const std::size_t> omega_rows() const { return omega_rows_; }
  std::span<const std::size_t> boundary_rows() const { return boundary_rows_; }

  /// m_x(Omega) for every closure node.
  double mass_in_omega(std::size_t i) const { return mass_in_omega_[i]; }

  // Closure-local CSR: row i holds the entries of m_{closure[i]} whose
  // targets lie in the closure.
  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const std::uint32_t> targets() const { return targets_; }
  std::span<const double> probs() const { return probs_; }

  bool operator==(const Domain&) const = default;

 private:
  friend Domain m_boundary(const Space& space, std::span<const NodeId> omega, double epsilon);

  std::vector<NodeId> omega_;
  std::vector<NodeId> boundary_;
  std::vector<NodeId> closure_;
  double interior_leak_ = 0.0;
  double epsilon_ = kDefaultBoundaryEpsilon;
  std::vector<Membership> membership_;
  std::vector<std::int64_t> local_of_;
  std::vector<std::size_t> omega_rows_;
  std::vector<std::size_t> boundary_rows_;
  std::vector<double> mass_in_omega_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> targets_;
  std::vector<double> probs_;
};

/// boundary = { x notin Omega : m_x(Omega) > epsilon }, closure = Omega u boundary,
/// interior_leak = max_{x in Omega} m_x(X \ closure).
Domain m_boundary(const Space& space, std::span<const NodeId> omega,
                  double epsilon = kDefaultBoundaryEpsilon);

/// Integration regions for the generalized product measure nu (x) m_x.
///   q1                - closure x closure
///   q2                - q1 minus boundary x boundary
///   boundary_boundary - boundary x boundary
///   all               - X x X
enum class Region { q1, q2, boundary_boundary, all };

/// sum over (x, y) in region of g(x, y) nu(x) m_x({y}).
double pair_integral(const Space& space, const Domain& domain, Region region,
                     const std::function<double(NodeId, NodeId)>& g);

}  // namespace mrws
