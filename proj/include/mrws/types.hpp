#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mrws {

/// Dense node index in [0, node_count).
using NodeId = std::uint32_t;

/// Which nonlocal Neumann operator closes the problem on the m-boundary.
///   gl   - flux integrates over the whole m-closure (Gunzburger-Lehoucq).
///   drov - flux integrates over Omega only (Dipierro-Ros-Oton-Valdinoci).
enum class Variant { gl, drov };

inline const char* to_string(Variant v) { return v == Variant::gl ? "gl" : "drov"; }

/// Thrown when a caller violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure cannot produce an answer
/// (singular Jacobian, failed bracket, diverging boundary extension).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mrws
