// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chai/cache/cache_entry.hpp"
#include "chai/text/embedding.hpp"

namespace chai::cache {

/// Surface recorded for the single whole-prompt key of an entry.
inline constexpr std::string_view kWholePromptKey = "<whole-prompt>";

struct IndexKey {
  std::string surface;
  text::Embedding embedding;
};

struct Match {
  EntryId entry_id;
  float score = 0.0f;
  std::string matched_key;
};

/// Exact nearest-neighbour index over unit embeddings.
///
/// Every lookup scores the query against every indexed vector; nothing is
/// approximated. Identical vectors are interned into one slot with a posting
/// list, and each slot keeps only its non-zero coordinates, so a scan costs
/// O(distinct vectors x non-zeros). Summing the non-zero products in ascending
/// coordinate order gives the same float as a dense sequential dot product.
///
/// Not thread-safe; SemanticCache provides locking.
class VectorIndex {
 public:
  /// Larger value wins a score tie (last_access_seq in practice).
  using RecencyFn = std::function<std::uint64_t(EntryId)>;

  explicit VectorIndex(std::size_t dim);

  std::size_t dim() const { return dim_; }

  /// Adds keys for `id`. Non-matchable embeddings are skipped and repeated
  /// surfaces for the same entry are collapsed (first one kept). Throws
  /// DimensionError on a dimension mismatch.
  void insert(EntryId id, std::span<const IndexKey> keys);

  /// Removes every key of `id`; no-op when absent.
  void remove(EntryId id);

  void clear();

  /// Highest cosine >= tau over all (query key, indexed key) pairs. Ties go to
  /// the larger recency, then the larger entry id.
  std::optional<Match> best_match(std::span<const IndexKey> query, float tau, const RecencyFn& recency) const;

  std::size_t key_count() const { return key_count_; }
  std::size_t distinct_vectors() const { return slot_of_.size(); }
  bool contains(EntryId id) const { return keys_of_.contains(id); }

  /// Surfaces currently indexed for `id`, in insertion order.
  std::vector<std::string> surfaces_of(EntryId id) const;

  /// Every entry with at least one key.
  std::vector<EntryId> entries() const;

 private:
  struct Posting {
    EntryId id;
    std::string surface;
  };
  struct Slot {
    std::string key;
    std::vector<std::uint32_t> positions;
    std::vector<float> values;
    std::vector<Posting> postings;
  };
  struct SlotRef {
    std::uint32_t slot;
    std::string surface;
  };

  static std::string vector_key(std::span<const float> v);
  float score(const Slot& slot, std::span<const float> query) const;

  std::size_t dim_;
  std::vector<Slot> slots_;
  std::vector<std::uint32_t> free_slots_;
  std::unordered_map<std::string, std::uint32_t> slot_of_;
  std::unordered_map<EntryId, std::vector<SlotRef>> keys_of_;
  std::size_t key_count_ = 0;
};

}  // namespace chai::cache
