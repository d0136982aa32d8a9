// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "chai/cache/cache_entry.hpp"
#include "chai/cache/latent.hpp"
#include "chai/model/schedule.hpp"
#include "chai/model/stdit_block.hpp"
#include "chai/text/embedding.hpp"

namespace chai::engine {

enum class DiffusionMode { full, fast };

std::string_view to_string(DiffusionMode mode);

inline constexpr int kDefaultFullSteps = 30;
inline constexpr int kDefaultFastSteps = 8;

struct ModelDims {
  std::size_t frames = 4;
  std::size_t tokens_per_frame = 16;
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t n_blocks = 2;
  std::size_t d_emb = text::kDefaultEmbeddingDim;

  cache::LatentShape latent_shape() const {
    return {static_cast<std::uint32_t>(frames), static_cast<std::uint32_t>(tokens_per_frame),
            static_cast<std::uint32_t>(d_model)};
  }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct DenoiseConfig {
  DiffusionMode mode = DiffusionMode::full;
  int n_steps = kDefaultFullSteps;
  ModelDims dims;
  std::uint64_t seed = 0;
  model::Schedule schedule;
  /// Steps after which the latent is kept in RunResult::snapshots (used to
  /// build whole-prompt substitution baselines).
  std::set<int> snapshot_steps;
  /// Record the block-0 attention input of every step in RunResult::block_inputs.
  bool trace_block_inputs = false;

  static DenoiseConfig full(ModelDims dims = {}, std::uint64_t seed = 0);
  static DenoiseConfig fast(ModelDims dims = {}, std::uint64_t seed = 0);

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

using StepLatents = std::map<int, cache::Latent>;

struct RunResult {
  cache::Latent final_latent = cache::Latent::zeros({1, 1, 1}, 1);
  /// Block-0 inputs of steps 2, 3, 4; present exactly for full-mode runs.
  std::optional<StepLatents> captured;
  /// Mean per-token L2 distance between the latents before and after each executed step.
  std::vector<double> step_deltas;
  /// (step, block) pairs whose spatial attention read the cache.
  std::vector<std::pair<int, int>> cache_invocations;
  int steps_executed = 0;
  StepLatents snapshots;
  StepLatents block_inputs;
};

/// The denoising network: n_blocks STDiT blocks whose weights are fixed by
/// (dims, seed). Immutable and safe to share between threads.
class Denoiser {
 public:
  Denoiser(ModelDims dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  std::uint64_t seed() const { return seed_; }

  /// Full mode captures the block-0 inputs of steps 2-4 and must not receive
  /// `cached`. Fast mode with an enabled schedule requires a cached latent for
  /// every scheduled step within the run; fast mode with a disabled schedule is
  /// a plain short run. Throws std::invalid_argument or DimensionError.
  RunResult run(const DenoiseConfig& cfg, const text::Embedding& prompt, const StepLatents* cached = nullptr) const;

  /// Starts from `start` (the latent after step K) and executes steps
  /// K+1..n_steps with the cache disabled.
  RunResult resume(const DenoiseConfig& cfg, const text::Embedding& prompt, const cache::Latent& start) const;

 private:
  void step(const DenoiseConfig& cfg, const text::Embedding& prompt, const StepLatents* cached, int k,
            double step_size, model::TokenGrid& x, RunResult& result) const;

  ModelDims dims_;
  std::uint64_t seed_;
  std::vector<model::BlockParams> blocks_;
};

/// Denoiser(cfg.dims, cfg.seed).run(...).
RunResult denoise(const DenoiseConfig& cfg, const text::Embedding& prompt,
                  const StepLatents* cached = nullptr);

/// Per-step feature distances of a run.
const std::vector<double>& feature_distance_trace(const RunResult& r);

/// Writes "step,delta" rows, numbering steps from `first_step`.
void write_step_deltas_csv(std::ostream& out, const RunResult& r, int first_step = 1);

/// Steps at which a whole-prompt substitution baseline keeps latents.
inline constexpr std::array<int, 5> kSubstitutionSteps{5, 10, 15, 20, 25};

struct SubstitutionBand {
  float min_similarity;
  int start_step;
};

/// >= 0.9 -> 25, >= 0.8 -> 20, >= 0.7 -> 15, >= 0.6 -> 10, otherwise 5.
inline constexpr std::array<SubstitutionBand, 4> kDefaultSubstitutionBands{
    {{0.9f, 25}, {0.8f, 20}, {0.7f, 15}, {0.6f, 10}}};

/// Similarity -> number of skipped steps: the first band (in order) whose
/// min_similarity is reached, otherwise 5. Throws std::invalid_argument when a
/// band's start_step is not one of kSubstitutionSteps.
int substitution_start_step(float similarity, std::span<const SubstitutionBand> bands = kDefaultSubstitutionBands);

/// Whole-prompt latent substitution: resume a full-mode run from a cached
/// latent captured after step K. Requires K in {5, 10, 15, 20, 25},
/// cached_latent.step_index == K and K < cfg.n_steps.
RunResult nirvana_substitute_start(const cache::Latent& cached_latent, int k, const DenoiseConfig& cfg,
                                   const text::Embedding& prompt);

}  // namespace chai::engine
