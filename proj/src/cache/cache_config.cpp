// SPDX-License-Identifier: Apache-2.0

#include "chai/cache/cache_config.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>

namespace chai::cache {

std::string_view to_string(EvictionPolicy policy) {
  switch (policy) {
    case EvictionPolicy::fifo:
      return "fifo";
    case EvictionPolicy::lru:
      return "lru";
    case EvictionPolicy::lfu:
      return "lfu";
  }
  return "?";
}

EvictionPolicy parse_policy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "fifo") return EvictionPolicy::fifo;
  if (lower == "lru") return EvictionPolicy::lru;
  if (lower == "lfu") return EvictionPolicy::lfu;
  throw std::invalid_argument("unknown eviction policy '" + std::string(name) + "'");
}

void CacheConfig::validate() const {
  if (capacity_bytes == 0) throw std::invalid_argument("capacity_bytes must be positive");
  auto in_range = [](float t) { return t > 0.0f && t <= 1.0f; };
  if (!in_range(tau_entity)) throw std::invalid_argument("tau_entity must be in (0, 1]");
  if (!in_range(tau_prompt)) throw std::invalid_argument("tau_prompt must be in (0, 1]");
}

std::uint64_t capacity_entries(std::uint64_t budget_bytes, std::uint64_t entry_bytes) {
  if (entry_bytes == 0) throw std::invalid_argument("entry_bytes must be positive");
  return budget_bytes / entry_bytes;
}

}  // namespace chai::cache
