// SPDX-License-Identifier: Apache-2.0

#include "chai/cache/vector_index.hpp"

#include <algorithm>
#include <cstring>
#include <string>
#include <tuple>

#include "chai/common/error.hpp"

namespace chai::cache {

VectorIndex::VectorIndex(std::size_t dim) : dim_(dim) {}

std::string VectorIndex::vector_key(std::span<const float> v) {
  std::string key(v.size() * sizeof(float), '\0');
  std::memcpy(key.data(), v.data(), key.size());
  return key;
}

float VectorIndex::score(const Slot& slot, std::span<const float> query) const {
  float dot = 0.0f;
  for (std::size_t i = 0; i < slot.positions.size(); ++i) dot += query[slot.positions[i]] * slot.values[i];
  return std::clamp(dot, -1.0f, 1.0f);
}

void VectorIndex::insert(EntryId id, std::span<const IndexKey> keys) {
  for (const auto& key : keys) {
    if (key.embedding.dim() != dim_) {
      throw DimensionError("index key '" + key.surface + "' has dim " + std::to_string(key.embedding.dim()) +
                           ", index dim is " + std::to_string(dim_));
    }
  }
  auto& refs = keys_of_[id];
  for (const auto& key : keys) {
    if (!key.embedding.matchable()) continue;
    const bool duplicate =
        std::any_of(refs.begin(), refs.end(), [&](const SlotRef& r) { return r.surface == key.surface; });
    if (duplicate) continue;

    const auto values = key.embedding.values();
    auto [it, fresh] = slot_of_.try_emplace(vector_key(values), 0);
    if (fresh) {
      std::uint32_t slot_id;
      if (!free_slots_.empty()) {
        slot_id = free_slots_.back();
        free_slots_.pop_back();
      } else {
        slot_id = static_cast<std::uint32_t>(slots_.size());
        slots_.emplace_back();
      }
      Slot& slot = slots_[slot_id];
      slot.key = it->first;
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != 0.0f) {
          slot.positions.push_back(static_cast<std::uint32_t>(i));
          slot.values.push_back(values[i]);
        }
      }
      it->second = slot_id;
    }
    slots_[it->second].postings.push_back(Posting{id, key.surface});
    refs.push_back(SlotRef{it->second, key.surface});
    ++key_count_;
  }
  if (refs.empty()) keys_of_.erase(id);
}

void VectorIndex::remove(EntryId id) {
  auto it = keys_of_.find(id);
  if (it == keys_of_.end()) return;
  for (const auto& ref : it->second) {
    Slot& slot = slots_[ref.slot];
    std::erase_if(slot.postings, [&](const Posting& p) { return p.id == id && p.surface == ref.surface; });
    --key_count_;
    if (slot.postings.empty()) {
      slot_of_.erase(slot.key);
      slot = Slot{};
      free_slots_.push_back(ref.slot);
    }
  }
  keys_of_.erase(it);
}

void VectorIndex::clear() {
  slots_.clear();
  free_slots_.clear();
  slot_of_.clear();
  keys_of_.clear();
  key_count_ = 0;
}

std::optional<Match> VectorIndex::best_match(std::span<const IndexKey> query, float tau,
                                             const RecencyFn& recency) const {
  std::optional<Match> best;
  std::uint64_t best_recency = 0;
  for (const auto& q : query) {
    if (!q.embedding.matchable()) continue;
    if (q.embedding.dim() != dim_) {
      throw DimensionError("query key '" + q.surface + "' has dim " + std::to_string(q.embedding.dim()) +
                           ", index dim is " + std::to_string(dim_));
    }
    const auto qv = q.embedding.values();
    for (const Slot& slot : slots_) {
      if (slot.postings.empty()) continue;
      const float s = score(slot, qv);
      if (s < tau || (best && s < best->score)) continue;
      for (const Posting& p : slot.postings) {
        const std::uint64_t r = recency(p.id);
        if (!best || std::tie(s, r, p.id) > std::tie(best->score, best_recency, best->entry_id)) {
          best = Match{p.id, s, p.surface};
          best_recency = r;
        }
      }
    }
  }
  return best;
}

std::vector<std::string> VectorIndex::surfaces_of(EntryId id) const {
  std::vector<std::string> out;
  if (auto it = keys_of_.find(id); it != keys_of_.end()) {
    for (const auto& ref : it->second) out.push_back(ref.surface);
  }
  return out;
}

std::vector<EntryId> VectorIndex::entries() const {
  std::vector<EntryId> out;
  out.reserve(keys_of_.size());
  for (const auto& [id, refs] : keys_of_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace chai::cache
