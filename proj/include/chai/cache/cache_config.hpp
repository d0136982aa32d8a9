// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace chai::cache {

enum class EvictionPolicy { fifo, lru, lfu };

inline constexpr std::size_t kPolicyCount = 3;

std::string_view to_string(EvictionPolicy policy);

/// Accepts "fifo", "lru", "lfu" in any case. Throws std::invalid_argument otherwise.
EvictionPolicy parse_policy(std::string_view name);

struct CacheConfig {
  std::uint64_t capacity_bytes = 1ULL << 30;
  EvictionPolicy policy = EvictionPolicy::lru;
  float tau_entity = 0.80f;
  float tau_prompt = 0.80f;

  /// Throws std::invalid_argument when capacity is zero or a threshold is outside (0, 1].
  void validate() const;
};

/// floor(budget_bytes / entry_bytes). Throws std::invalid_argument if entry_bytes == 0.
std::uint64_t capacity_entries(std::uint64_t budget_bytes, std::uint64_t entry_bytes);

}  // namespace chai::cache
