#pragma once

#include "compass/opinion_space.hpp"
#include "compass/topology.hpp"

namespace compass {

/// One clock ring: the edge whose endpoints interact at `time`, plus the
/// geodesic choice used if their opinions turn out to be antipodal.
struct Event {
  double time = 0.0;
  EdgeId edge = 0;
  TieBit tie = TieBit::first;

  friend bool operator==(const Event&, const Event&) = default;
};

}  // namespace compass
