// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "chai/cache/cache_config.hpp"
#include "chai/cache/cache_entry.hpp"
#include "chai/cache/latent_store.hpp"
#include "chai/cache/vector_index.hpp"

namespace chai::cache {

struct CacheStats {
  std::uint64_t entries = 0;
  std::uint64_t bytes_used = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t puts = 0;
  std::array<std::uint64_t, kPolicyCount> evictions_by_policy{};

  std::uint64_t evictions() const {
    return evictions_by_policy[0] + evictions_by_policy[1] + evictions_by_policy[2];
  }
};

/// Vector DB + latent store + policy engine behind one lock.
///
/// Lookups take a shared lock and may run concurrently. put, get (which
/// updates access metadata), flush and load take the exclusive lock. Index
/// keys of an evicted entry are dropped inside the same critical section as
/// the store removal, so readers never see a key without its entry.
class SemanticCache {
 public:
  SemanticCache(CacheConfig config, std::size_t embedding_dim);

  const CacheConfig& config() const { return config_; }
  std::size_t embedding_dim() const { return entity_index_.dim(); }

  EntryId allocate_id() { return EntryId{next_id_.fetch_add(1) + 1}; }

  /// Stores `entry` and indexes it. `prompt_key` is skipped when non-matchable.
  /// Returns evicted ids in eviction order.
  std::vector<EntryId> put(CacheEntry entry, std::span<const IndexKey> entity_keys,
                           const std::optional<IndexKey>& prompt_key);

  /// Best entity-level match with score >= tau (config value when omitted).
  /// Counts a hit or a miss.
  std::optional<Match> lookup_entity(std::span<const IndexKey> query, std::optional<float> tau = {});

  /// Best whole-prompt match with score >= tau. Counts a hit or a miss.
  std::optional<Match> lookup_whole_prompt(const text::Embedding& query, std::optional<float> tau = {});

  /// Copy of the entry after recording an access. Throws NotFoundError.
  CacheEntry get(EntryId id);

  /// Copy of the entry without recording an access; nullopt when absent.
  std::optional<CacheEntry> peek(EntryId id) const;

  bool contains(EntryId id) const;

  /// Removes everything; returns the number of entries dropped.
  std::size_t flush();

  CacheStats stats() const;

  /// Empty string when the index and the store agree; otherwise a description
  /// of the first inconsistency found.
  std::string coherence_error() const;

  /// Writes one latent file per cached step plus entries.jsonl.
  void save(const std::filesystem::path& dir) const;

  /// Replaces the contents with a directory written by save(). Index keys are
  /// rebuilt from the stored surfaces and prompt text. Entries are restored
  /// without eviction, so the result may exceed a smaller budget.
  void load(const std::filesystem::path& dir);

  /// Next victim first.
  std::vector<EntryId> victim_order() const;

 private:
  void drop_keys(EntryId id);

  CacheConfig config_;
  mutable std::shared_mutex mutex_;
  LatentStore store_;
  VectorIndex entity_index_;
  VectorIndex prompt_index_;
  std::atomic<std::uint64_t> next_id_{0};
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
  std::uint64_t puts_ = 0;
  std::array<std::uint64_t, kPolicyCount> evictions_{};
};

}  // namespace chai::cache
