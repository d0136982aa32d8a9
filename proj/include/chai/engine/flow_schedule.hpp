// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace chai::engine {

/// Uniform rectified-flow time grid. Fewer steps means a larger step_size and
/// therefore a larger change per step.
struct FlowSchedule {
  int n_steps = 0;
  std::vector<double> timesteps;  // t_k = 1 - (k - 1) / n_steps, k = 1..n_steps
  double step_size = 0.0;         // 1 / n_steps
};

/// Throws std::invalid_argument when n_steps < 1.
FlowSchedule make_flow_schedule(int n_steps);

}  // namespace chai::engine
