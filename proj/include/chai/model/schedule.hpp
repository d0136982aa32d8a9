// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>

namespace chai::model {

/// Which (denoising step, block) pairs read the latent cache in a fast run.
/// Steps are 1-indexed, blocks 0-indexed.
struct Schedule {
  bool enabled = true;
  std::set<int> cache_steps{2, 3, 4};
  std::set<int> cache_blocks{0};

  static Schedule disabled() { return Schedule{false, {}, {}}; }

  /// Throws std::invalid_argument when enabled with an empty set, a step < 2
  /// (step 1 only has unmodulated noise as its query), or a negative block.
  void validate() const;
};

bool schedule_use_cache(int step, int block, const Schedule& schedule, bool cache_available);

}  // namespace chai::model
