// SPDX-License-Identifier: Apache-2.0

#include "chai/engine/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "chai/common/error.hpp"
#include "chai/common/hash.hpp"
#include "chai/common/rng.hpp"
#include "chai/engine/flow_schedule.hpp"

namespace chai::engine {

namespace {

constexpr std::uint64_t kWeightsTag = 0x7765696768747331ULL;
constexpr std::uint64_t kNoiseTag = 0x6e6f697365303031ULL;

bool is_captured_step(int k) {
  return std::find(cache::kCachedSteps.begin(), cache::kCachedSteps.end(), k) != cache::kCachedSteps.end();
}

void check_shape(const cache::Latent& latent, const ModelDims& dims, std::string_view what) {
  if (!(latent.shape() == dims.latent_shape())) {
    throw DimensionError(std::string(what) + " dims do not match the model dims");
  }
}

}  // namespace

std::string_view to_string(DiffusionMode mode) { return mode == DiffusionMode::full ? "full" : "fast"; }

DenoiseConfig DenoiseConfig::full(ModelDims dims, std::uint64_t seed) {
  DenoiseConfig c;
  c.mode = DiffusionMode::full;
  c.n_steps = kDefaultFullSteps;
  c.dims = dims;
  c.seed = seed;
  return c;
}

DenoiseConfig DenoiseConfig::fast(ModelDims dims, std::uint64_t seed) {
  DenoiseConfig c = full(dims, seed);
  c.mode = DiffusionMode::fast;
  c.n_steps = kDefaultFastSteps;
  return c;
}

void DenoiseConfig::validate() const {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  if (mode == DiffusionMode::full && n_steps < cache::kCachedSteps.back()) {
    throw std::invalid_argument("a full run needs at least " + std::to_string(cache::kCachedSteps.back()) +
                                " steps to capture latents");
  }
  if (dims.frames == 0 || dims.tokens_per_frame == 0 || dims.d_model == 0 || dims.n_blocks == 0) {
    throw std::invalid_argument("model dims must be positive");
  }
  if (dims.n_heads == 0 || dims.d_model % dims.n_heads != 0) {
    throw std::invalid_argument("n_heads must divide d_model");
  }
  text::validate_embedding_dim(dims.d_emb);
  schedule.validate();
}

Denoiser::Denoiser(ModelDims dims, std::uint64_t seed) : dims_(dims), seed_(seed) {
  DenoiseConfig probe = DenoiseConfig::full(dims, seed);
  probe.validate();
  const std::uint64_t weights_seed = derive_seed(seed, kWeightsTag);
  for (std::size_t b = 0; b < dims_.n_blocks; ++b) {
    blocks_.push_back(model::BlockParams::generate(dims_.d_model, dims_.n_heads, dims_.d_emb,
                                                   derive_seed(weights_seed, b)));
  }
}

void Denoiser::step(const DenoiseConfig& cfg, const text::Embedding& prompt, const StepLatents* cached, int k,
                    double step_size, model::TokenGrid& x, RunResult& result) const {
  model::TokenGrid h = x;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const int block = static_cast<int>(b);
    if (block == 0) {
      const bool capture = cfg.mode == DiffusionMode::full && is_captured_step(k) && result.captured;
      if (capture || cfg.trace_block_inputs) {
        cache::Latent input = model::modulate(h, prompt, blocks_[b]).to_latent(k);
        if (cfg.trace_block_inputs) result.block_inputs.insert_or_assign(k, input);
        if (capture) result.captured->insert_or_assign(k, std::move(input));
      }
    }
    const bool use = model::schedule_use_cache(k, block, cfg.schedule, cached != nullptr);
    const cache::Latent* donor = nullptr;
    if (use) {
      donor = &cached->at(k);
      result.cache_invocations.emplace_back(k, block);
    }
    h = model::stdit_block(h, prompt, donor, use, blocks_[b]);
  }

  // Velocity points from data towards noise; time runs from 1 down to 0.
  const float dt = static_cast<float>(step_size);
  const auto v = h.data();
  auto xd = x.data();
  double delta_sum = 0.0;
  const std::size_t d = x.d_model();
  for (std::size_t t = 0; t < x.token_count(); ++t) {
    double sq = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t i = t * d + c;
      const float before = xd[i];
      xd[i] = before - dt * v[i];
      const double diff = static_cast<double>(xd[i]) - before;
      sq += diff * diff;
    }
    delta_sum += std::sqrt(sq);
  }
  result.step_deltas.push_back(delta_sum / static_cast<double>(x.token_count()));
  ++result.steps_executed;
  if (cfg.snapshot_steps.contains(k)) result.snapshots.insert_or_assign(k, x.to_latent(k));
}

RunResult Denoiser::run(const DenoiseConfig& cfg, const text::Embedding& prompt, const StepLatents* cached) const {
  cfg.validate();
  if (!(cfg.dims == dims_)) throw DimensionError("denoise config dims differ from the model dims");
  if (prompt.dim() != dims_.d_emb) throw DimensionError("prompt embedding dim differs from the model d_emb");

  const bool fast = cfg.mode == DiffusionMode::fast;
  if (!fast && cached) throw std::invalid_argument("full mode never consumes cached latents");
  if (fast && cfg.schedule.enabled) {
    if (!cached) throw std::invalid_argument("fast mode with an enabled schedule requires cached latents");
    for (int k : cfg.schedule.cache_steps) {
      if (k > cfg.n_steps) continue;
      auto it = cached->find(k);
      if (it == cached->end()) {
        throw std::invalid_argument("missing cached latent for step " + std::to_string(k));
      }
      check_shape(it->second, dims_, "cached latent");
      if (it->second.step_index() != k) {
        throw std::invalid_argument("cached latent for step " + std::to_string(k) + " has step_index " +
                                    std::to_string(it->second.step_index()));
      }
    }
  }
  const StepLatents* usable = fast && cfg.schedule.enabled ? cached : nullptr;

  const FlowSchedule flow = make_flow_schedule(cfg.n_steps);
  SplitMix64 rng(derive_seed(cfg.seed, kNoiseTag));
  std::vector<float> noise(dims_.latent_shape().element_count());
  for (float& v : noise) v = static_cast<float>(rng.gaussian());
  model::TokenGrid x(dims_.frames, dims_.tokens_per_frame, dims_.d_model, std::move(noise));

  RunResult result;
  if (!fast) result.captured.emplace();
  result.step_deltas.reserve(static_cast<std::size_t>(cfg.n_steps));
  for (int k = 1; k <= cfg.n_steps; ++k) step(cfg, prompt, usable, k, flow.step_size, x, result);
  result.final_latent = x.to_latent(cfg.n_steps);
  return result;
}

RunResult Denoiser::resume(const DenoiseConfig& cfg, const text::Embedding& prompt,
                           const cache::Latent& start) const {
  cfg.validate();
  if (!(cfg.dims == dims_)) throw DimensionError("denoise config dims differ from the model dims");
  if (prompt.dim() != dims_.d_emb) throw DimensionError("prompt embedding dim differs from the model d_emb");
  check_shape(start, dims_, "start latent");
  const int k0 = start.step_index();
  if (k0 >= cfg.n_steps) throw std::invalid_argument("start step must precede the last step");

  DenoiseConfig plain = cfg;
  plain.schedule = model::Schedule::disabled();
  const FlowSchedule flow = make_flow_schedule(cfg.n_steps);
  model::TokenGrid x = model::TokenGrid::from_latent(start);
  RunResult result;
  for (int k = k0 + 1; k <= cfg.n_steps; ++k) step(plain, prompt, nullptr, k, flow.step_size, x, result);
  result.final_latent = x.to_latent(cfg.n_steps);
  return result;
}

RunResult denoise(const DenoiseConfig& cfg, const text::Embedding& prompt, const StepLatents* cached) {
  return Denoiser(cfg.dims, cfg.seed).run(cfg, prompt, cached);
}

const std::vector<double>& feature_distance_trace(const RunResult& r) { return r.step_deltas; }

void write_step_deltas_csv(std::ostream& out, const RunResult& r, int first_step) {
  out << "step,delta\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < r.step_deltas.size(); ++i) {
    out << first_step + static_cast<int>(i) << ',' << r.step_deltas[i] << '\n';
  }
  out.precision(old_precision);
}

int substitution_start_step(float similarity, std::span<const SubstitutionBand> bands) {
  for (const auto& band : bands) {
    if (std::find(kSubstitutionSteps.begin(), kSubstitutionSteps.end(), band.start_step) == kSubstitutionSteps.end()) {
      throw std::invalid_argument("band start step must be one of 5, 10, 15, 20, 25");
    }
  }
  for (const auto& band : bands) {
    if (similarity >= band.min_similarity) return band.start_step;
  }
  return kSubstitutionSteps.front();
}

RunResult nirvana_substitute_start(const cache::Latent& cached_latent, int k, const DenoiseConfig& cfg,
                                   const text::Embedding& prompt) {
  if (std::find(kSubstitutionSteps.begin(), kSubstitutionSteps.end(), k) == kSubstitutionSteps.end()) {
    throw std::invalid_argument("substitution step must be one of 5, 10, 15, 20, 25");
  }
  if (cached_latent.step_index() != k) {
    throw std::invalid_argument("cached latent was captured at step " + std::to_string(cached_latent.step_index()) +
                                ", expected " + std::to_string(k));
  }
  if (cfg.mode != DiffusionMode::full) throw std::invalid_argument("latent substitution runs in full mode");
  return Denoiser(cfg.dims, cfg.seed).resume(cfg, prompt, cached_latent);
}

}  // namespace chai::engine
