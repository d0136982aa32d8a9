// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chai/cache/latent.hpp"
#include "chai/model/attention.hpp"
#include "chai/model/token_grid.hpp"
#include "chai/text/embedding.hpp"

namespace chai::model {

/// Weights of one spatio-temporal transformer block, all derived from a seed.
struct BlockParams {
  std::size_t d_model = 0;
  std::size_t d_emb = 0;
  std::size_t d_hidden = 0;
  AttentionParams spatial;   // the layer Cache Attention replaces
  AttentionParams temporal;
  std::vector<float> mod_shift;  // d_emb x d_model
  std::vector<float> mod_scale;  // d_emb x d_model
  std::vector<float> mlp_w1;     // d_model x d_hidden
  std::vector<float> mlp_b1;
  std::vector<float> mlp_w2;  // d_hidden x d_model
  std::vector<float> mlp_b2;

  static BlockParams generate(std::size_t d_model, std::size_t n_heads, std::size_t d_emb, std::uint64_t seed);
};

/// Prompt conditioning: every token becomes x * (1 + scale) + shift, where
/// shift and scale are linear projections of the prompt embedding.
TokenGrid modulate(const TokenGrid& x, const text::Embedding& prompt, const BlockParams& p);

/// One block:
///   m = modulate(x, prompt)
///   h = x + MHA(q = m, kv = use_cache ? cached : m)
///   h = h + temporal_attention(h)
///   y = h + MLP(h)
/// The spatial layer attends over every token of the grid. Throws
/// std::invalid_argument when use_cache is set without a cached latent and
/// DimensionError when the cached latent's dims differ from x.
TokenGrid stdit_block(const TokenGrid& x, const text::Embedding& prompt, const cache::Latent* cached, bool use_cache,
                      const BlockParams& p);

}  // namespace chai::model
