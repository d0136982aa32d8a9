// SPDX-License-Identifier: Apache-2.0

#include "chai/model/stdit_block.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "chai/common/error.hpp"
#include "chai/common/hash.hpp"
#include "chai/common/rng.hpp"

namespace chai::model {

namespace {

constexpr float kAttentionOutputGain = 0.5f;
constexpr double kShiftStddev = 0.5;
constexpr double kScaleStddev = 0.1;
constexpr std::size_t kMlpExpansion = 2;

std::vector<float> uniform_weights(std::size_t n, double stddev, std::uint64_t seed) {
  const double a = stddev * std::sqrt(3.0);
  SplitMix64 rng(seed);
  std::vector<float> w(n);
  for (float& v : w) v = static_cast<float>(rng.uniform(-a, a));
  return w;
}

float gelu(float x) { return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f)); }

}  // namespace

BlockParams BlockParams::generate(std::size_t d_model, std::size_t n_heads, std::size_t d_emb, std::uint64_t seed) {
  BlockParams p;
  p.d_model = d_model;
  p.d_emb = d_emb;
  p.d_hidden = kMlpExpansion * d_model;
  p.spatial = AttentionParams::generate(d_model, n_heads, derive_seed(seed, 10), kAttentionOutputGain);
  p.temporal = AttentionParams::generate(d_model, n_heads, derive_seed(seed, 11), kAttentionOutputGain);
  p.mod_shift = uniform_weights(d_emb * d_model, kShiftStddev, derive_seed(seed, 12));
  p.mod_scale = uniform_weights(d_emb * d_model, kScaleStddev, derive_seed(seed, 13));
  p.mlp_w1 = uniform_weights(d_model * p.d_hidden, 1.0 / std::sqrt(double(d_model)), derive_seed(seed, 14));
  p.mlp_b1 = uniform_weights(p.d_hidden, 0.02, derive_seed(seed, 15));
  p.mlp_w2 = uniform_weights(p.d_hidden * d_model, 0.5 / std::sqrt(double(p.d_hidden)), derive_seed(seed, 16));
  p.mlp_b2 = uniform_weights(d_model, 0.02, derive_seed(seed, 17));
  return p;
}

TokenGrid modulate(const TokenGrid& x, const text::Embedding& prompt, const BlockParams& p) {
  if (x.d_model() != p.d_model) throw DimensionError("modulate: token width does not match d_model");
  if (prompt.dim() != p.d_emb) {
    throw DimensionError("modulate: prompt embedding dim " + std::to_string(prompt.dim()) + " != " +
                         std::to_string(p.d_emb));
  }
  std::vector<float> shift(p.d_model), scale(p.d_model);
  matmul(prompt.values(), 1, p.d_emb, p.mod_shift, p.d_model, shift);
  matmul(prompt.values(), 1, p.d_emb, p.mod_scale, p.d_model, scale);

  TokenGrid out = x;
  for (std::size_t t = 0; t < out.token_count(); ++t) {
    auto tok = out.token(t);
    for (std::size_t c = 0; c < p.d_model; ++c) tok[c] = tok[c] * (1.0f + scale[c]) + shift[c];
  }
  return out;
}

TokenGrid stdit_block(const TokenGrid& x, const text::Embedding& prompt, const cache::Latent* cached, bool use_cache,
                      const BlockParams& p) {
  if (use_cache && cached == nullptr) throw std::invalid_argument("stdit_block: use_cache without a cached latent");
  if (use_cache) {
    const auto& s = cached->shape();
    if (s.frames != x.frames() || s.tokens_per_frame != x.tokens_per_frame() || s.channels != x.d_model()) {
      throw DimensionError("stdit_block: cached latent dims do not match the block input");
    }
  }

  const TokenGrid m = modulate(x, prompt, p);
  const TokenGrid attended =
      use_cache ? multi_head_attention(m, TokenGrid::from_latent(*cached), p.spatial) : self_attention(m, p.spatial);

  TokenGrid h = x;
  auto hd = h.data();
  for (std::size_t i = 0; i < hd.size(); ++i) hd[i] += attended.data()[i];

  const TokenGrid temporal = temporal_attention(h, p.temporal);
  for (std::size_t i = 0; i < hd.size(); ++i) hd[i] += temporal.data()[i];

  const std::size_t n = h.token_count();
  std::vector<float> hidden(n * p.d_hidden);
  matmul(h.data(), n, p.d_model, p.mlp_w1, p.d_hidden, hidden);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < p.d_hidden; ++j) {
      float& v = hidden[t * p.d_hidden + j];
      v = gelu(v + p.mlp_b1[j]);
    }
  }
  std::vector<float> mlp_out(n * p.d_model);
  matmul(hidden, n, p.d_hidden, p.mlp_w2, p.d_model, mlp_out);

  TokenGrid y = std::move(h);
  auto yd = y.data();
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < p.d_model; ++c) yd[t * p.d_model + c] += mlp_out[t * p.d_model + c] + p.mlp_b2[c];
  }
  return y;
}

}  // namespace chai::model
