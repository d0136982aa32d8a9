// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "chai/text/entity.hpp"

namespace chai::text {

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

/// Unit-norm similarity vector. The all-zeros vector is reserved for inputs
/// with no features and is never matchable.
class Embedding {
 public:
  Embedding() = default;

  static Embedding zeros(std::size_t dim);

  /// L2-normalizes `values`. An all-zero input yields zeros(values.size()).
  static Embedding normalized(std::vector<float> values);

  std::span<const float> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  bool matchable() const { return matchable_; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<float> values_;
  bool matchable_ = false;
};

/// Throws std::invalid_argument unless dim >= 16 and a power of two.
void validate_embedding_dim(std::size_t dim);

/// Signed feature hashing of word unigrams plus boundary-marked character
/// trigrams, projected to `dim` buckets and L2-normalized.
Embedding embed_text(std::string_view text, std::size_t dim = kDefaultEmbeddingDim);

/// embed_text over the surface; the kind does not contribute.
Embedding embed_entity(const Entity& entity, std::size_t dim = kDefaultEmbeddingDim);

/// Dot product of two unit vectors clamped to [-1, 1]. Throws DimensionError
/// when the dimensions differ.
float cosine(const Embedding& a, const Embedding& b);

}  // namespace chai::text
