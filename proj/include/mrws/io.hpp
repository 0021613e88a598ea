#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "mrws/evolution.hpp"
#include "mrws/field.hpp"
#include "mrws/leray_lions.hpp"
#include "mrws/space.hpp"

namespace mrws::io {

using nlohmann::json;

/// Reads a JSON document; parse errors become InvalidInput.
json read_json(const std::filesystem::path& path);

/// Graph file {"edges": [[i, j, w], ...], "labels"?: [...], "nodes"?: n}
/// or kernel file {"grid": {...}, "kernel": {...}, "support_radius"?: r}.
Space space_from_json(const json& doc);
Space load_space(const std::filesystem::path& path);

/// {"type": "plaplacian"|"weighted", "p": real, "phi"?: [...]}.
LerayLionsMap map_from_json(const json& doc, std::size_t node_count);

Variant variant_from_string(const std::string& s);

/// {"constant": c} or {"<node>": value, ...}. Nodes of `support` that are
/// not listed get 0; listing a node outside `support` is an error.
Field field_from_json(const json& doc, std::span<const NodeId> support, const char* what);

/// Shortest representation that reads back to the same double.
std::string format_double(double v);

/// node,label,value
void write_field_csv(std::ostream& os, const Space& space, const Field& u);
/// t,node,value (Omega values)
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);
/// t,mass,drift_gap
void write_ledger_csv(std::ostream& os, const Trajectory& trajectory, const LedgerReport& ledger);

/// Throws InvalidInput naming the first key of `doc` not in `allowed`.
void require_known_keys(const json& doc, std::initializer_list<const char*> allowed, const char* where);

}  // namespace mrws::io
