// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <set>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "chai/cache/cache_config.hpp"
#include "chai/cache/cache_entry.hpp"

namespace chai::cache {

/// Byte-budgeted entry store plus the replacement policy engine.
///
/// Every put and every get draws a fresh number from one monotone sequence.
/// FIFO orders victims by created_seq, LRU by last_access_seq, LFU by
/// access_count with last_access_seq breaking ties. The entry being inserted
/// is never its own victim. Not thread-safe.
class LatentStore {
 public:
  LatentStore(std::uint64_t capacity_bytes, EvictionPolicy policy);

  /// Stores `entry` (its sequence counters are assigned here) and evicts until
  /// the budget holds. Returns evicted ids in eviction order. Throws
  /// CapacityError if the entry alone exceeds the budget and
  /// std::invalid_argument on a duplicate id; the store is unchanged then.
  std::vector<EntryId> put(CacheEntry entry);

  /// Re-inserts an entry with its persisted counters, without evicting.
  void restore(CacheEntry entry);

  /// Records an access and returns the entry. Throws NotFoundError.
  const CacheEntry& get(EntryId id);

  /// Read-only lookup without touching access metadata; nullptr when absent.
  const CacheEntry* peek(EntryId id) const;

  bool erase(EntryId id);
  std::size_t clear();

  std::size_t size() const { return entries_.size(); }
  std::uint64_t bytes_used() const { return bytes_used_; }
  std::uint64_t capacity_bytes() const { return capacity_bytes_; }
  EvictionPolicy policy() const { return policy_; }
  std::uint64_t sequence() const { return seq_; }

  /// Entry ids in victim order (next victim first).
  std::vector<EntryId> victim_order() const;

 private:
  using OrderKey = std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>;

  OrderKey order_key(const CacheEntry& e) const;
  void link(const CacheEntry& e) { order_.insert(order_key(e)); }
  void unlink(const CacheEntry& e) { order_.erase(order_key(e)); }

  std::uint64_t capacity_bytes_;
  EvictionPolicy policy_;
  std::uint64_t bytes_used_ = 0;
  std::uint64_t seq_ = 0;
  std::unordered_map<EntryId, CacheEntry> entries_;
  std::set<OrderKey> order_;
};

}  // namespace chai::cache
