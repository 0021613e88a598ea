#pragma once

#include <span>
#include <vector>

#include "mrws/space.hpp"
#include "mrws/types.hpp"

namespace mrws {

/// Real values on a sorted node subset. Lookup outside the support throws.
class Field {
 public:
  Field() = default;
  Field(std::vector<NodeId> support, std::vector<double> values);

  static Field constant(std::span<const NodeId> support, double value);
  static Field zeros(std::span<const NodeId> support) { return constant(support, 0.0); }

  std::span<const NodeId> support() const { return support_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return support_.size(); }
  bool empty() const { return support_.empty(); }

  bool contains(NodeId x) const;
  /// Throws std::out_of_range for nodes outside the support.
  double at(NodeId x) const;

  /// Values at `nodes`, in that order; throws if any node is missing.
  std::vector<double> gather(std::span<const NodeId> nodes) const;
  /// The sub-field on `nodes` (which must be sorted and inside the support).
  Field restrict_to(std::span<const NodeId> nodes) const;

  bool operator==(const Field&) const = default;

 private:
  std::vector<NodeId> support_;
  std::vector<double> values_;
};

/// Field on the closure from closure-local values.
Field closure_field(const Domain& domain, std::span<const double> local_values);

/// Closure-local values of a field defined on (at least) the closure.
std::vector<double> closure_values(const Domain& domain, const Field& u);

/// Closure-local vector from a field on Omega and a field on the boundary.
std::vector<double> closure_values(const Domain& domain, const Field& interior, const Field& boundary);

/// max |values|, 0 for an empty field.
double sup_norm(const Field& f);

}  // namespace mrws
