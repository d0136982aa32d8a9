// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace chai::replay {

/// Measured per-request latencies in seconds; defaults are 30-step full and
/// 8-step fast timings of the production video model.
struct LatencyModel {
  double t_full = 12.59;
  double t_fast = 3.75;
  double t_lookup = 0.0;

  /// Throws std::invalid_argument unless 0 <= t_fast < t_full and t_lookup >= 0.
  void validate() const;
};

/// h * (t_fast + t_lookup) + (1 - h) * (t_full + t_lookup). Throws
/// std::invalid_argument when h is outside [0, 1].
double expected_latency(double hit_rate, const LatencyModel& lat);

}  // namespace chai::replay
