// SPDX-License-Identifier: Apache-2.0

#include "chai/cache/semantic_cache.hpp"

#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "chai/cache/latent_io.hpp"
#include "chai/common/error.hpp"

namespace chai::cache {

namespace {

constexpr const char* kMetadataFile = "entries.jsonl";

std::string latent_file_name(EntryId id, int step) {
  return "entry-" + std::to_string(id.value) + "-step-" + std::to_string(step) + ".latent";
}

}  // namespace

SemanticCache::SemanticCache(CacheConfig config, std::size_t embedding_dim)
    : config_(config),
      store_(config.capacity_bytes, config.policy),
      entity_index_(embedding_dim),
      prompt_index_(embedding_dim) {
  config_.validate();
  text::validate_embedding_dim(embedding_dim);
}

void SemanticCache::drop_keys(EntryId id) {
  entity_index_.remove(id);
  prompt_index_.remove(id);
}

std::vector<EntryId> SemanticCache::put(CacheEntry entry, std::span<const IndexKey> entity_keys,
                                        const std::optional<IndexKey>& prompt_key) {
  for (const auto& key : entity_keys) {
    if (key.embedding.dim() != embedding_dim()) throw DimensionError("entity key dimension mismatch");
  }
  if (prompt_key && prompt_key->embedding.dim() != embedding_dim()) {
    throw DimensionError("prompt key dimension mismatch");
  }
  std::unique_lock lock(mutex_);
  const EntryId id = entry.entry_id;
  auto evicted = store_.put(std::move(entry));
  for (EntryId victim : evicted) drop_keys(victim);
  entity_index_.insert(id, entity_keys);
  if (prompt_key) {
    IndexKey whole{std::string(kWholePromptKey), prompt_key->embedding};
    prompt_index_.insert(id, std::span(&whole, 1));
  }
  ++puts_;
  evictions_[static_cast<std::size_t>(config_.policy)] += evicted.size();
  return evicted;
}

std::optional<Match> SemanticCache::lookup_entity(std::span<const IndexKey> query, std::optional<float> tau) {
  std::optional<Match> match;
  {
    std::shared_lock lock(mutex_);
    match = entity_index_.best_match(query, tau.value_or(config_.tau_entity), [this](EntryId id) {
      const CacheEntry* e = store_.peek(id);
      return e ? e->last_access_seq : 0;
    });
  }
  (match ? hits_ : misses_).fetch_add(1, std::memory_order_relaxed);
  return match;
}

std::optional<Match> SemanticCache::lookup_whole_prompt(const text::Embedding& query, std::optional<float> tau) {
  const IndexKey key{std::string(kWholePromptKey), query};
  std::optional<Match> match;
  {
    std::shared_lock lock(mutex_);
    match = prompt_index_.best_match(std::span(&key, 1), tau.value_or(config_.tau_prompt), [this](EntryId id) {
      const CacheEntry* e = store_.peek(id);
      return e ? e->last_access_seq : 0;
    });
  }
  (match ? hits_ : misses_).fetch_add(1, std::memory_order_relaxed);
  return match;
}

CacheEntry SemanticCache::get(EntryId id) {
  std::unique_lock lock(mutex_);
  return store_.get(id);
}

std::optional<CacheEntry> SemanticCache::peek(EntryId id) const {
  std::shared_lock lock(mutex_);
  const CacheEntry* e = store_.peek(id);
  return e ? std::optional<CacheEntry>(*e) : std::nullopt;
}

bool SemanticCache::contains(EntryId id) const {
  std::shared_lock lock(mutex_);
  return store_.peek(id) != nullptr;
}

std::size_t SemanticCache::flush() {
  std::unique_lock lock(mutex_);
  entity_index_.clear();
  prompt_index_.clear();
  return store_.clear();
}

CacheStats SemanticCache::stats() const {
  std::shared_lock lock(mutex_);
  CacheStats s;
  s.entries = store_.size();
  s.bytes_used = store_.bytes_used();
  s.hits = hits_.load(std::memory_order_relaxed);
  s.misses = misses_.load(std::memory_order_relaxed);
  s.puts = puts_;
  s.evictions_by_policy = evictions_;
  return s;
}

std::vector<EntryId> SemanticCache::victim_order() const {
  std::shared_lock lock(mutex_);
  return store_.victim_order();
}

std::string SemanticCache::coherence_error() const {
  std::shared_lock lock(mutex_);
  for (const VectorIndex* index : {&entity_index_, &prompt_index_}) {
    for (EntryId id : index->entries()) {
      if (!store_.peek(id)) return "index key for non-resident entry " + std::to_string(id.value);
    }
  }
  if (store_.bytes_used() > store_.capacity_bytes()) {
    return "bytes_used " + std::to_string(store_.bytes_used()) + " exceeds capacity";
  }
  std::uint64_t total = 0;
  for (EntryId id : store_.victim_order()) {
    const CacheEntry* e = store_.peek(id);
    if (!e) return "policy order references missing entry " + std::to_string(id.value);
    total += e->size_bytes;
  }
  if (total != store_.bytes_used()) return "bytes_used disagrees with resident entry sizes";
  if (store_.victim_order().size() != store_.size()) return "policy order size disagrees with store";
  return {};
}

void SemanticCache::save(const std::filesystem::path& dir) const {
  std::shared_lock lock(mutex_);
  std::filesystem::create_directories(dir);
  std::ofstream meta(dir / kMetadataFile, std::ios::trunc);
  if (!meta) throw std::runtime_error("cannot write " + (dir / kMetadataFile).string());
  // Victim order makes the file deterministic and restores in policy order.
  for (EntryId id : store_.victim_order()) {
    const CacheEntry& e = *store_.peek(id);
    nlohmann::json latents = nlohmann::json::object();
    for (const auto& [step, latent] : e.latents) {
      const auto name = latent_file_name(id, step);
      write_latent_file(dir / name, *latent);
      latents[std::to_string(step)] = name;
    }
    nlohmann::json record = {
        {"entry_id", e.entry_id.value},
        {"prompt_id", e.prompt_id},
        {"prompt_text", e.prompt_text},
        {"entity_surfaces", e.entity_surfaces},
        {"created_seq", e.created_seq},
        {"last_access_seq", e.last_access_seq},
        {"access_count", e.access_count},
        {"latents", latents},
    };
    meta << record.dump() << '\n';
  }
}

void SemanticCache::load(const std::filesystem::path& dir) {
  std::ifstream meta(dir / kMetadataFile);
  if (!meta) throw std::runtime_error("cannot open " + (dir / kMetadataFile).string());

  struct Loaded {
    CacheEntry entry;
    std::vector<IndexKey> entity_keys;
    std::optional<IndexKey> prompt_key;
  };
  std::vector<Loaded> loaded;
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t max_id = 0;
  while (std::getline(meta, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LatentSet latents;
      for (const auto& [step, file] : j.at("latents").items()) {
        latents.emplace(std::stoi(step),
                        std::make_shared<const Latent>(read_latent_file(dir / file.get<std::string>())));
      }
      Loaded l;
      l.entry = make_entry(EntryId{j.at("entry_id").get<std::uint64_t>()}, j.at("prompt_id").get<std::string>(),
                           j.value("prompt_text", std::string{}),
                           j.at("entity_surfaces").get<std::vector<std::string>>(), std::move(latents));
      l.entry.created_seq = j.at("created_seq").get<std::uint64_t>();
      l.entry.last_access_seq = j.at("last_access_seq").get<std::uint64_t>();
      l.entry.access_count = j.at("access_count").get<std::uint64_t>();
      for (const auto& s : l.entry.entity_surfaces) {
        l.entity_keys.push_back(IndexKey{s, text::embed_text(s, embedding_dim())});
      }
      auto whole = text::embed_text(l.entry.prompt_text, embedding_dim());
      if (whole.matchable()) l.prompt_key = IndexKey{std::string(kWholePromptKey), std::move(whole)};
      max_id = std::max(max_id, l.entry.entry_id.value);
      loaded.push_back(std::move(l));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
  }

  std::unique_lock lock(mutex_);
  entity_index_.clear();
  prompt_index_.clear();
  store_.clear();
  for (auto& l : loaded) {
    const EntryId id = l.entry.entry_id;
    store_.restore(std::move(l.entry));
    entity_index_.insert(id, l.entity_keys);
    if (l.prompt_key) prompt_index_.insert(id, std::span(&*l.prompt_key, 1));
  }
  std::uint64_t cur = next_id_.load();
  while (cur < max_id && !next_id_.compare_exchange_weak(cur, max_id)) {
  }
}

}  // namespace chai::cache
