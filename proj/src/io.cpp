#include "mrws/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

namespace mrws::io {

namespace {

template <class T>
T get(const json& doc, const char* key, const char* where) {
  if (!doc.contains(key)) throw InvalidInput(std::string(where) + ": missing key '" + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string(where) + "." + key + ": " + e.what());
  }
}

KernelType kernel_type(const std::string& s) {
  if (s == "box") return KernelType::box;
  if (s == "tent") return KernelType::tent;
  if (s == "gauss_trunc") return KernelType::gauss_trunc;
  throw InvalidInput("unknown kernel type '" + s + "'");
}

Space graph_from_json(const json& doc) {
  require_known_keys(doc, {"edges", "labels", "nodes"}, "graph");
  const auto& raw = doc.at("edges");
  if (!raw.is_array()) throw InvalidInput("graph.edges must be an array");
  std::vector<Edge> edges;
  for (const auto& e : raw) {
    if (!e.is_array() || e.size() != 3) throw InvalidInput("each edge must be [i, j, w]");
    try {
      const auto a = e[0].get<std::int64_t>();
      const auto b = e[1].get<std::int64_t>();
      if (a < 0 || b < 0) throw InvalidInput("edge endpoints must be nonnegative");
      edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b), e[2].get<double>()});
    } catch (const json::exception& ex) {
      throw InvalidInput(std::string("bad edge: ") + ex.what());
    }
  }
  std::vector<std::string> labels;
  if (doc.contains("labels")) labels = get<std::vector<std::string>>(doc, "labels", "graph");
  std::size_t nodes = doc.contains("nodes") ? get<std::size_t>(doc, "nodes", "graph") : 0;
  if (nodes == 0 && !labels.empty()) nodes = labels.size();
  return build_graph_space(edges, nodes, std::move(labels));
}

Space kernel_from_json(const json& doc) {
  require_known_keys(doc, {"grid", "kernel", "support_radius"}, "kernel space");
  const auto& g = doc.at("grid");
  require_known_keys(g, {"dim", "shape", "h", "origin"}, "grid");
  GridSpec grid;
  grid.dim = get<int>(g, "dim", "grid");
  if (grid.dim != 1 && grid.dim != 2) throw InvalidInput("grid.dim must be 1 or 2");
  const auto shape = get<std::vector<std::size_t>>(g, "shape", "grid");
  if (shape.size() != static_cast<std::size_t>(grid.dim)) throw InvalidInput("grid.shape must have dim entries");
  grid.shape = {shape[0], grid.dim == 2 ? shape[1] : 1};
  grid.h = get<double>(g, "h", "grid");
  if (g.contains("origin")) {
    const auto o = get<std::vector<double>>(g, "origin", "grid");
    if (o.size() != static_cast<std::size_t>(grid.dim)) throw InvalidInput("grid.origin must have dim entries");
    grid.origin = {o[0], grid.dim == 2 ? o[1] : 0.0};
  }

  const auto& k = doc.at("kernel");
  require_known_keys(k, {"type", "radius", "params"}, "kernel");
  KernelSpec spec;
  spec.type = kernel_type(get<std::string>(k, "type", "kernel"));
  spec.radius = get<double>(k, "radius", "kernel");
  if (k.contains("params")) {
    const auto& p = k.at("params");
    require_known_keys(p, {"height", "sigma"}, "kernel.params");
    if (p.contains("height")) spec.height = get<double>(p, "height", "kernel.params");
    if (p.contains("sigma")) spec.sigma = get<double>(p, "sigma", "kernel.params");
  }
  const double support = doc.contains("support_radius") ? get<double>(doc, "support_radius", "kernel space")
                                                        : spec.radius;
  return build_kernel_space(grid, make_radial_profile(spec, grid.dim), support);
}

}  // namespace

void require_known_keys(const json& doc, std::initializer_list<const char*> allowed, const char* where) {
  if (!doc.is_object()) throw InvalidInput(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw InvalidInput(std::string(where) + ": unknown key '" + key + "'");
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

Space space_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidInput("space file must be a JSON object");
  if (doc.contains("edges")) return graph_from_json(doc);
  if (doc.contains("grid")) return kernel_from_json(doc);
  throw InvalidInput("space file needs either 'edges' or 'grid'");
}

Space load_space(const std::filesystem::path& path) { return space_from_json(read_json(path)); }

LerayLionsMap map_from_json(const json& doc, std::size_t node_count) {
  require_known_keys(doc, {"type", "p", "phi"}, "ap");
  const auto type = get<std::string>(doc, "type", "ap");
  const double p = get<double>(doc, "p", "ap");
  if (type == "plaplacian") {
    if (doc.contains("phi")) throw InvalidInput("ap.phi only applies to the weighted type");
    return make_plaplacian(p);
  }
  if (type == "weighted") {
    auto phi = get<std::vector<double>>(doc, "phi", "ap");
    if (phi.size() != node_count) throw InvalidInput("ap.phi needs one value per node");
    return make_weighted_plaplacian(p, std::move(phi));
  }
  throw InvalidInput("unknown ap.type '" + type + "'");
}

Variant variant_from_string(const std::string& s) {
  if (s == "gl") return Variant::gl;
  if (s == "drov") return Variant::drov;
  throw InvalidInput("variant must be 'gl' or 'drov'");
}

Field field_from_json(const json& doc, std::span<const NodeId> support, const char* what) {
  if (doc.is_number()) return Field::constant(support, doc.get<double>());
  if (!doc.is_object()) throw InvalidInput(std::string(what) + " must be a number or an object");
  if (doc.contains("constant")) {
    if (doc.size() != 1) throw InvalidInput(std::string(what) + ": 'constant' excludes other keys");
    return Field::constant(support, get<double>(doc, "constant", what));
  }
  std::vector<double> values(support.size(), 0.0);
  for (const auto& [key, value] : doc.items()) {
    NodeId node = 0;
    const auto* end = key.data() + key.size();
    const auto [ptr, ec] = std::from_chars(key.data(), end, node);
    if (ec != std::errc{} || ptr != end)
      throw InvalidInput(std::string(what) + ": key '" + key + "' is not a node index");
    const auto it = std::lower_bound(support.begin(), support.end(), node);
    if (it == support.end() || *it != node)
      throw InvalidInput(std::string(what) + ": node " + key + " is outside its node set");
    if (!value.is_number()) throw InvalidInput(std::string(what) + ": value for node " + key + " must be a number");
    values[static_cast<std::size_t>(it - support.begin())] = value.get<double>();
  }
  return Field({support.begin(), support.end()}, std::move(values));
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

void write_field_csv(std::ostream& os, const Space& space, const Field& u) {
  os << "node,label,value\n";
  const auto support = u.support();
  const auto values = u.values();
  for (std::size_t i = 0; i < support.size(); ++i)
    os << support[i] << ',' << space.label(support[i]) << ',' << format_double(values[i]) << '\n';
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  os << "t,node,value\n";
  for (std::size_t k = 0; k < trajectory.times.size(); ++k) {
    const auto& f = trajectory.fields[k];
    for (std::size_t i = 0; i < f.size(); ++i)
      os << format_double(trajectory.times[k]) << ',' << f.support()[i] << ',' << format_double(f.values()[i]) << '\n';
  }
}

void write_ledger_csv(std::ostream& os, const Trajectory& trajectory, const LedgerReport& ledger) {
  os << "t,mass,drift_gap\n";
  for (std::size_t k = 0; k < trajectory.times.size(); ++k)
    os << format_double(trajectory.times[k]) << ',' << format_double(trajectory.masses[k]) << ','
       << format_double(ledger.gaps[k]) << '\n';
}

}  // namespace mrws::io
