// SPDX-License-Identifier: Apache-2.0

#include "chai/engine/flow_schedule.hpp"

#include <stdexcept>

namespace chai::engine {

FlowSchedule make_flow_schedule(int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  FlowSchedule s;
  s.n_steps = n_steps;
  s.step_size = 1.0 / n_steps;
  s.timesteps.reserve(static_cast<std::size_t>(n_steps));
  for (int k = 1; k <= n_steps; ++k) s.timesteps.push_back(1.0 - static_cast<double>(k - 1) / n_steps);
  return s;
}

}  // namespace chai::engine
