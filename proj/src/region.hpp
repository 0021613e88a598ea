#pragma once

#include "mrws/space.hpp"

namespace mrws::detail {

inline bool region_includes(Region region, Membership mx, Membership my) {
  using M = Membership;
  switch (region) {
    case Region::all:
      return true;
    case Region::q1:
      return mx != M::outside && my != M::outside;
    case Region::q2:
      return mx != M::outside && my != M::outside && !(mx == M::boundary && my == M::boundary);
    case Region::boundary_boundary:
      return mx == M::boundary && my == M::boundary;
  }
  return false;
}

}  // namespace mrws::detail
