// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chai/model/token_grid.hpp"

namespace chai::model {

/// Q/K/V/O projections of one multi-head attention layer. Matrices are
/// d_model x d_model, row-major, applied as row-vector x matrix. Immutable
/// after construction.
class AttentionParams {
 public:
  AttentionParams() = default;

  /// Weights drawn uniformly with standard deviation 1/sqrt(d_model); the
  /// output projection is further scaled by `output_gain`. Bit-identical for
  /// equal arguments.
  static AttentionParams generate(std::size_t d_model, std::size_t n_heads, std::uint64_t seed,
                                  float output_gain = 1.0f);

  /// Explicit weights. Throws std::invalid_argument when n_heads does not
  /// divide d_model, a matrix has the wrong size, or a weight is non-finite.
  AttentionParams(std::size_t d_model, std::size_t n_heads, std::vector<float> wq, std::vector<float> wk,
                  std::vector<float> wv, std::vector<float> wo, std::uint64_t seed = 0);

  std::size_t d_model() const { return d_model_; }
  std::size_t n_heads() const { return n_heads_; }
  std::size_t d_head() const { return d_model_ / n_heads_; }
  std::uint64_t seed() const { return seed_; }

  const std::vector<float>& wq() const { return wq_; }
  const std::vector<float>& wk() const { return wk_; }
  const std::vector<float>& wv() const { return wv_; }
  const std::vector<float>& wo() const { return wo_; }

  friend bool operator==(const AttentionParams&, const AttentionParams&) = default;

 private:
  std::size_t d_model_ = 0;
  std::size_t n_heads_ = 1;
  std::vector<float> wq_, wk_, wv_, wo_;
  std::uint64_t seed_ = 0;
};

/// Softmax weights recorded during an attention call: index
/// [(head * q_tokens + i) * kv_tokens + j].
struct AttentionProbabilities {
  std::size_t n_heads = 0;
  std::size_t q_tokens = 0;
  std::size_t kv_tokens = 0;
  std::vector<float> weights;

  float at(std::size_t head, std::size_t i, std::size_t j) const {
    return weights[(head * q_tokens + i) * kv_tokens + j];
  }
};

/// Scaled dot-product attention with queries from `q_src` and keys/values
/// from `kv_src`. With kv_src == q_src this is plain self-attention; with a
/// cached latent as kv_src it is Cache Attention. Token counts may differ;
/// the output has q_src's shape. Throws DimensionError on a width mismatch.
/// When `probabilities` is non-null the softmax weights are copied into it.
TokenGrid multi_head_attention(const TokenGrid& q_src, const TokenGrid& kv_src, const AttentionParams& p,
                               AttentionProbabilities* probabilities = nullptr);

inline TokenGrid self_attention(const TokenGrid& x, const AttentionParams& p) {
  return multi_head_attention(x, x, p);
}

/// Self-attention across frames, independently for every spatial position.
/// Never reads a cache.
TokenGrid temporal_attention(const TokenGrid& x, const AttentionParams& p);

}  // namespace chai::model
