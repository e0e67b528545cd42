#include "wavearm/types.hpp"

#include <cmath>
#include <stdexcept>

namespace wavearm {

ArmModel default_arm_model(int segments) {
  ArmModel m;
  m.geom.count = segments;
  // Elastomer-backbone regime: stiff enough that an unactuated segment sags
  // and oscillates gently rather than swinging freely under wave load.
  m.dyn.stiffness = Vec::Constant(segments, 5.0);
  m.dyn.damping = Vec::Constant(segments, 0.5);
  return m;
}

void validate_state(const Vec& q, const Vec& qdot, const SegmentGeometry& geom) {
  if (q.size() != geom.count || qdot.size() != geom.count)
    throw std::invalid_argument("state size does not match segment count");
  if (!q.allFinite() || !qdot.allFinite())
    throw std::invalid_argument("state contains non-finite entries");
}

} // namespace wavearm
