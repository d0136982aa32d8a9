// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chai/cache/semantic_cache.hpp"
#include "chai/engine/denoiser.hpp"
#include "chai/model/schedule.hpp"
#include "chai/replay/latency.hpp"
#include "chai/text/embedding.hpp"
#include "chai/text/entity.hpp"

namespace chai::service {

enum class MatchingMode { entity, whole_prompt };

std::string_view to_string(MatchingMode mode);

/// Accepts "entity", "whole" and "whole_prompt". Throws std::invalid_argument.
MatchingMode parse_matching(std::string_view name);

struct PipelineConfig {
  cache::CacheConfig cache;
  MatchingMode matching = MatchingMode::entity;
  engine::ModelDims dims;
  std::uint64_t seed = 0;
  int n_steps_full = engine::kDefaultFullSteps;
  int n_steps_fast = engine::kDefaultFastSteps;
  model::Schedule schedule;
  replay::LatencyModel latency;
  /// When false no denoising runs: hits and misses are decided and modeled,
  /// and cache entries carry shared zero latents of the exact size.
  bool exec_engine = true;

  void validate() const;
};

struct GenerateOverrides {
  std::optional<float> tau;
  std::optional<MatchingMode> matching;
  std::optional<int> n_steps_fast;
};

struct Outcome {
  bool cache_hit = false;
  engine::DiffusionMode mode = engine::DiffusionMode::full;
  std::optional<cache::Match> match;
  int steps_executed = 0;
  double modeled_latency_s = 0.0;
  std::optional<std::uint64_t> latent_digest;
  std::optional<cache::EntryId> stored_entry;
  std::vector<cache::EntryId> evicted;
};

/// The request flow shared by the server and the trace replayer:
/// extract entities -> embed -> look up -> fast run on a hit, or full run plus
/// one cache write on a miss.
///
/// Thread-safe: lookups run in parallel, cache writes are serialized by the
/// cache, and each engine run is independent.
class GenerationPipeline {
 public:
  explicit GenerationPipeline(PipelineConfig config);

  /// Throws std::invalid_argument for a bad override; engine and cache errors propagate.
  Outcome generate(const text::Prompt& prompt, const GenerateOverrides& overrides = {});

  /// The miss path without a lookup; used to warm the cache.
  Outcome generate_uncached(const text::Prompt& prompt);

  std::size_t flush() { return cache_.flush(); }

  cache::SemanticCache& cache() { return cache_; }
  const cache::SemanticCache& cache() const { return cache_; }
  const PipelineConfig& config() const { return config_; }

  /// Number of cache writes issued by this pipeline.
  std::uint64_t writes() const;

 private:
  std::vector<cache::IndexKey> entity_keys(const std::vector<text::Entity>& entities);
  Outcome run_miss(const text::Prompt& prompt, const std::vector<text::Entity>& entities,
                   const text::Embedding& prompt_embedding);
  double modeled_latency(engine::DiffusionMode mode, int steps) const;

  PipelineConfig config_;
  cache::SemanticCache cache_;
  engine::Denoiser denoiser_;
  cache::LatentSet placeholders_;

  mutable std::mutex memo_mutex_;
  std::unordered_map<std::string, text::Embedding> entity_memo_;
  std::atomic<std::uint64_t> writes_{0};
};

}  // namespace chai::service
