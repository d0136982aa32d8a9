// SPDX-License-Identifier: Apache-2.0

#include "chai/text/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "chai/common/error.hpp"
#include "chai/common/hash.hpp"
#include "chai/text/tokenize.hpp"

namespace chai::text {

namespace {

constexpr float kUnigramWeight = 1.0f;
constexpr float kTrigramWeight = 0.5f;

// Feature namespaces keep a word and an identical trigram from sharing a hash.
constexpr std::uint64_t kUnigramSeed = fnv1a64("w\x1f");
constexpr std::uint64_t kTrigramSeed = fnv1a64("c\x1f");

void add_feature(std::vector<double>& acc, std::uint64_t h, float weight) {
  const std::size_t bucket = static_cast<std::size_t>(h & (acc.size() - 1));
  const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
  acc[bucket] += sign * weight;
}

// Splits a UTF-8 token into code point slices.
std::vector<std::string_view> code_points(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i + 1;
    while (j < s.size() && (static_cast<unsigned char>(s[j]) & 0xc0) == 0x80) ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Embedding Embedding::zeros(std::size_t dim) {
  Embedding e;
  e.values_.assign(dim, 0.0f);
  e.matchable_ = false;
  return e;
}

Embedding Embedding::normalized(std::vector<float> values) {
  double sq = 0.0;
  for (float v : values) sq += static_cast<double>(v) * v;
  if (!(sq > 0.0) || !std::isfinite(sq)) return zeros(values.size());
  const double inv = 1.0 / std::sqrt(sq);
  Embedding e;
  e.values_ = std::move(values);
  for (float& v : e.values_) v = static_cast<float>(v * inv);
  e.matchable_ = true;
  return e;
}

void validate_embedding_dim(std::size_t dim) {
  if (dim < 16 || !std::has_single_bit(dim)) {
    throw std::invalid_argument("embedding dimension must be a power of two >= 16, got " +
                                std::to_string(dim));
  }
}

Embedding embed_text(std::string_view text, std::size_t dim) {
  validate_embedding_dim(dim);
  std::vector<double> acc(dim, 0.0);
  bool any = false;
  for (const auto& token : tokenize(text)) {
    any = true;
    add_feature(acc, fnv1a64(token, kUnigramSeed), kUnigramWeight);

    // "^" and "$" mark word boundaries; neither is a letter, so no token contains them.
    auto cps = code_points(token);
    cps.insert(cps.begin(), "^");
    cps.push_back("$");
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
      std::uint64_t h = kTrigramSeed;
      for (std::size_t k = 0; k < 3; ++k) h = fnv1a64(cps[i + k], h);
      add_feature(acc, h, kTrigramWeight);
    }
  }
  if (!any) return Embedding::zeros(dim);
  std::vector<float> values(dim);
  std::transform(acc.begin(), acc.end(), values.begin(), [](double v) { return static_cast<float>(v); });
  return Embedding::normalized(std::move(values));
}

Embedding embed_entity(const Entity& entity, std::size_t dim) { return embed_text(entity.surface, dim); }

float cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("cosine: dimension mismatch " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  }
  const auto x = a.values();
  const auto y = b.values();
  float dot = 0.0f;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  return std::clamp(dot, -1.0f, 1.0f);
}

}  // namespace chai::text
