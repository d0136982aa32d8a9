// SPDX-License-Identifier: Apache-2.0

#include "chai/cache/latent_store.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "chai/common/error.hpp"

namespace chai::cache {

LatentStore::LatentStore(std::uint64_t capacity_bytes, EvictionPolicy policy)
    : capacity_bytes_(capacity_bytes), policy_(policy) {
  if (capacity_bytes_ == 0) throw std::invalid_argument("capacity_bytes must be positive");
}

LatentStore::OrderKey LatentStore::order_key(const CacheEntry& e) const {
  switch (policy_) {
    case EvictionPolicy::fifo:
      return {e.created_seq, 0, e.entry_id.value};
    case EvictionPolicy::lru:
      return {e.last_access_seq, 0, e.entry_id.value};
    case EvictionPolicy::lfu:
      return {e.access_count, e.last_access_seq, e.entry_id.value};
  }
  return {};
}

std::vector<EntryId> LatentStore::put(CacheEntry entry) {
  if (entry.size_bytes > capacity_bytes_) {
    throw CapacityError("entry of " + std::to_string(entry.size_bytes) + " bytes exceeds cache capacity of " +
                        std::to_string(capacity_bytes_) + " bytes");
  }
  if (entries_.contains(entry.entry_id)) {
    throw std::invalid_argument("duplicate entry id " + std::to_string(entry.entry_id.value));
  }
  const EntryId incoming = entry.entry_id;
  entry.created_seq = entry.last_access_seq = ++seq_;
  entry.access_count = 0;
  bytes_used_ += entry.size_bytes;
  link(entry);
  entries_.emplace(incoming, std::move(entry));

  std::vector<EntryId> evicted;
  while (bytes_used_ > capacity_bytes_) {
    auto victim = order_.begin();
    if (std::get<2>(*victim) == incoming.value) ++victim;
    const EntryId id{std::get<2>(*victim)};
    erase(id);
    evicted.push_back(id);
  }
  return evicted;
}

void LatentStore::restore(CacheEntry entry) {
  if (entries_.contains(entry.entry_id)) {
    throw std::invalid_argument("duplicate entry id " + std::to_string(entry.entry_id.value));
  }
  seq_ = std::max({seq_, entry.created_seq, entry.last_access_seq});
  bytes_used_ += entry.size_bytes;
  link(entry);
  const EntryId id = entry.entry_id;
  entries_.emplace(id, std::move(entry));
}

const CacheEntry& LatentStore::get(EntryId id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw NotFoundError("cache entry " + std::to_string(id.value) + " not found");
  CacheEntry& e = it->second;
  unlink(e);
  e.last_access_seq = ++seq_;
  ++e.access_count;
  link(e);
  return e;
}

const CacheEntry* LatentStore::peek(EntryId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

bool LatentStore::erase(EntryId id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) return false;
  unlink(it->second);
  bytes_used_ -= it->second.size_bytes;
  entries_.erase(it);
  return true;
}

std::size_t LatentStore::clear() {
  const std::size_t n = entries_.size();
  entries_.clear();
  order_.clear();
  bytes_used_ = 0;
  return n;
}

std::vector<EntryId> LatentStore::victim_order() const {
  std::vector<EntryId> out;
  out.reserve(order_.size());
  for (const auto& key : order_) out.push_back(EntryId{std::get<2>(key)});
  return out;
}

}  // namespace chai::cache
