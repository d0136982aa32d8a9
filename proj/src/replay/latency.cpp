// SPDX-License-Identifier: Apache-2.0

#include "chai/replay/latency.hpp"

#include <stdexcept>

namespace chai::replay {

void LatencyModel::validate() const {
  if (!(t_fast >= 0.0) || !(t_lookup >= 0.0)) throw std::invalid_argument("latencies must be non-negative");
  if (!(t_fast < t_full)) throw std::invalid_argument("t_fast must be smaller than t_full");
}

double expected_latency(double hit_rate, const LatencyModel& lat) {
  if (!(hit_rate >= 0.0 && hit_rate <= 1.0)) throw std::invalid_argument("hit rate must be in [0, 1]");
  return hit_rate * (lat.t_fast + lat.t_lookup) + (1.0 - hit_rate) * (lat.t_full + lat.t_lookup);
}

}  // namespace chai::replay
