// SPDX-License-Identifier: Apache-2.0

#include "chai/model/schedule.hpp"

#include <stdexcept>

namespace chai::model {

void Schedule::validate() const {
  if (!enabled) return;
  if (cache_steps.empty() || cache_blocks.empty()) {
    throw std::invalid_argument("an enabled schedule needs at least one step and one block");
  }
  if (*cache_steps.begin() < 2) throw std::invalid_argument("the cache is never used on denoising step 1");
  if (*cache_blocks.begin() < 0) throw std::invalid_argument("block indices are non-negative");
}

bool schedule_use_cache(int step, int block, const Schedule& schedule, bool cache_available) {
  // Step 1 is excluded regardless of configuration: its query is raw noise.
  if (!cache_available || !schedule.enabled || step < 2) return false;
  return schedule.cache_steps.contains(step) && schedule.cache_blocks.contains(block);
}

}  // namespace chai::model
