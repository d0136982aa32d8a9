// SPDX-License-Identifier: Apache-2.0

#include "chai/service/pipeline.hpp"

#include <stdexcept>
#include <string>

#include "chai/common/error.hpp"
#include "chai/common/hash.hpp"

namespace chai::service {

namespace {

constexpr std::size_t kEntityMemoLimit = 1 << 16;

}  // namespace

std::string_view to_string(MatchingMode mode) { return mode == MatchingMode::entity ? "entity" : "whole"; }

MatchingMode parse_matching(std::string_view name) {
  if (name == "entity") return MatchingMode::entity;
  if (name == "whole" || name == "whole_prompt" || name == "whole-prompt") return MatchingMode::whole_prompt;
  throw std::invalid_argument("unknown matching mode '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
  cache.validate();
  latency.validate();
  schedule.validate();
  if (n_steps_fast < 1) throw std::invalid_argument("n_steps_fast must be >= 1");
  if (n_steps_fast >= n_steps_full) throw std::invalid_argument("n_steps_fast must be smaller than n_steps_full");
  engine::DenoiseConfig probe = engine::DenoiseConfig::full(dims, seed);
  probe.n_steps = n_steps_full;
  probe.validate();
  if (cache::entry_size_bytes(dims.latent_shape()) > cache.capacity_bytes) {
    throw std::invalid_argument("capacity_bytes (" + std::to_string(cache.capacity_bytes) +
                                ") is smaller than one cache entry (" +
                                std::to_string(cache::entry_size_bytes(dims.latent_shape())) + " bytes)");
  }
}

GenerationPipeline::GenerationPipeline(PipelineConfig config)
    : config_((config.validate(), std::move(config))),
      cache_(config_.cache, config_.dims.d_emb),
      denoiser_(config_.dims, config_.seed),
      placeholders_(cache::placeholder_latents(config_.dims.latent_shape())) {}

std::uint64_t GenerationPipeline::writes() const { return writes_.load(); }

std::vector<cache::IndexKey> GenerationPipeline::entity_keys(const std::vector<text::Entity>& entities) {
  std::vector<cache::IndexKey> keys;
  keys.reserve(entities.size());
  std::lock_guard lock(memo_mutex_);
  for (const auto& e : entities) {
    auto it = entity_memo_.find(e.surface);
    if (it == entity_memo_.end()) {
      if (entity_memo_.size() >= kEntityMemoLimit) entity_memo_.clear();
      it = entity_memo_.emplace(e.surface, text::embed_entity(e, config_.dims.d_emb)).first;
    }
    keys.push_back(cache::IndexKey{e.surface, it->second});
  }
  return keys;
}

double GenerationPipeline::modeled_latency(engine::DiffusionMode mode, int steps) const {
  const auto& lat = config_.latency;
  // Per-step cost is calibrated on the default step counts.
  const double run = mode == engine::DiffusionMode::full
                         ? lat.t_full * steps / engine::kDefaultFullSteps
                         : lat.t_fast * steps / engine::kDefaultFastSteps;
  return run + lat.t_lookup;
}

Outcome GenerationPipeline::run_miss(const text::Prompt& prompt, const std::vector<text::Entity>& entities,
                                     const text::Embedding& prompt_embedding) {
  Outcome out;
  out.cache_hit = false;
  out.mode = engine::DiffusionMode::full;
  out.steps_executed = config_.n_steps_full;
  out.modeled_latency_s = modeled_latency(out.mode, out.steps_executed);

  cache::LatentSet latents;
  if (config_.exec_engine) {
    engine::DenoiseConfig cfg = engine::DenoiseConfig::full(config_.dims, config_.seed);
    cfg.n_steps = config_.n_steps_full;
    engine::RunResult run = denoiser_.run(cfg, prompt_embedding);
    out.latent_digest = fnv1a64(run.final_latent.data());
    for (auto& [step, latent] : *run.captured) {
      latents.emplace(step, std::make_shared<const cache::Latent>(std::move(latent)));
    }
  } else {
    latents = placeholders_;
  }

  std::vector<std::string> surfaces;
  surfaces.reserve(entities.size());
  for (const auto& e : entities) surfaces.push_back(e.surface);

  const cache::EntryId id = cache_.allocate_id();
  cache::CacheEntry entry = cache::make_entry(id, prompt.id, prompt.text, std::move(surfaces), std::move(latents));
  std::optional<cache::IndexKey> prompt_key;
  if (prompt_embedding.matchable()) prompt_key = cache::IndexKey{std::string(cache::kWholePromptKey), prompt_embedding};
  out.evicted = cache_.put(std::move(entry), entity_keys(entities), prompt_key);
  out.stored_entry = id;
  writes_.fetch_add(1);
  return out;
}

Outcome GenerationPipeline::generate_uncached(const text::Prompt& prompt) {
  const auto entities = text::extract_entities(prompt.text);
  return run_miss(prompt, entities, text::embed_text(prompt.text, config_.dims.d_emb));
}

Outcome GenerationPipeline::generate(const text::Prompt& prompt, const GenerateOverrides& overrides) {
  if (overrides.tau && !(*overrides.tau > 0.0f && *overrides.tau <= 1.0f)) {
    throw std::invalid_argument("tau override must be in (0, 1]");
  }
  const int fast_steps = overrides.n_steps_fast.value_or(config_.n_steps_fast);
  if (fast_steps < 1 || fast_steps >= config_.n_steps_full) {
    throw std::invalid_argument("n_steps_fast override must be in [1, " + std::to_string(config_.n_steps_full - 1) +
                                "]");
  }
  const MatchingMode matching = overrides.matching.value_or(config_.matching);

  const auto entities = text::extract_entities(prompt.text);
  // The whole-prompt embedding conditions the engine and keys the prompt index.
  std::optional<text::Embedding> prompt_embedding;
  auto whole = [&]() -> const text::Embedding& {
    if (!prompt_embedding) prompt_embedding = text::embed_text(prompt.text, config_.dims.d_emb);
    return *prompt_embedding;
  };

  std::optional<cache::Match> match;
  if (matching == MatchingMode::entity) {
    const auto keys = entity_keys(entities);
    match = cache_.lookup_entity(keys, overrides.tau);
  } else {
    match = cache_.lookup_whole_prompt(whole(), overrides.tau);
  }

  if (match) {
    std::optional<cache::CacheEntry> donor;
    try {
      donor = cache_.get(match->entry_id);
    } catch (const NotFoundError&) {
      // Evicted by a concurrent writer between lookup and fetch: serve as a miss.
    }
    if (donor) {
      Outcome out;
      out.cache_hit = true;
      out.mode = engine::DiffusionMode::fast;
      out.match = std::move(match);
      out.steps_executed = fast_steps;
      out.modeled_latency_s = modeled_latency(out.mode, fast_steps);
      if (config_.exec_engine) {
        engine::DenoiseConfig cfg = engine::DenoiseConfig::fast(config_.dims, config_.seed);
        cfg.n_steps = fast_steps;
        cfg.schedule = config_.schedule;
        engine::StepLatents cached;
        for (const auto& [step, latent] : donor->latents) cached.emplace(step, *latent);
        const engine::RunResult run = denoiser_.run(cfg, whole(), &cached);
        out.latent_digest = fnv1a64(run.final_latent.data());
      }
      return out;
    }
  }
  return run_miss(prompt, entities, whole());
}

}  // namespace chai::service
