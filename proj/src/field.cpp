#include "mrws/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mrws {

Field::Field(std::vector<NodeId> support, std::vector<double> values)
    : support_(std::move(support)), values_(std::move(values)) {
  if (support_.size() != values_.size()) throw InvalidInput("field support and values differ in length");
  for (std::size_t i = 1; i < support_.size(); ++i)
    if (support_[i] <= support_[i - 1]) throw InvalidInput("field support must be strictly increasing");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidInput("field values must be finite");
}

Field Field::constant(std::span<const NodeId> support, double value) {
  return Field({support.begin(), support.end()}, std::vector<double>(support.size(), value));
}

bool Field::contains(NodeId x) const {
  return std::binary_search(support_.begin(), support_.end(), x);
}

double Field::at(NodeId x) const {
  auto it = std::lower_bound(support_.begin(), support_.end(), x);
  if (it == support_.end() || *it != x)
    throw std::out_of_range("node " + std::to_string(x) + " is outside the field support");
  return values_[static_cast<std::size_t>(it - support_.begin())];
}

std::vector<double> Field::gather(std::span<const NodeId> nodes) const {
  std::vector<double> out;
  out.reserve(nodes.size());
  for (NodeId x : nodes) out.push_back(at(x));
  return out;
}

Field Field::restrict_to(std::span<const NodeId> nodes) const {
  return Field({nodes.begin(), nodes.end()}, gather(nodes));
}

Field closure_field(const Domain& domain, std::span<const double> local_values) {
  if (local_values.size() != domain.size()) throw InvalidInput("closure value count mismatch");
  return Field({domain.closure().begin(), domain.closure().end()},
               {local_values.begin(), local_values.end()});
}

std::vector<double> closure_values(const Domain& domain, const Field& u) {
  return u.gather(domain.closure());
}

std::vector<double> closure_values(const Domain& domain, const Field& interior, const Field& boundary) {
  std::vector<double> out(domain.size());
  for (std::size_t i : domain.omega_rows()) out[i] = interior.at(domain.global(i));
  for (std::size_t i : domain.boundary_rows()) out[i] = boundary.at(domain.global(i));
  return out;
}

double sup_norm(const Field& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace mrws
