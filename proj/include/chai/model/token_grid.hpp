// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chai/cache/latent.hpp"

namespace chai::model {

/// Tokens of a latent laid out frame-major: token (f, s) lives at index
/// f * tokens_per_frame + s and is d_model floats wide.
class TokenGrid {
 public:
  TokenGrid() = default;
  TokenGrid(std::size_t frames, std::size_t tokens_per_frame, std::size_t d_model, std::vector<float> data);

  static TokenGrid zeros(std::size_t frames, std::size_t tokens_per_frame, std::size_t d_model);
  static TokenGrid from_latent(const cache::Latent& latent);

  cache::Latent to_latent(int step_index) const;

  std::size_t frames() const { return frames_; }
  std::size_t tokens_per_frame() const { return tokens_per_frame_; }
  std::size_t d_model() const { return d_model_; }
  std::size_t token_count() const { return frames_ * tokens_per_frame_; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }
  std::span<const float> token(std::size_t i) const { return {data_.data() + i * d_model_, d_model_}; }
  std::span<float> token(std::size_t i) { return {data_.data() + i * d_model_, d_model_}; }

  bool same_shape(const TokenGrid& other) const {
    return frames_ == other.frames_ && tokens_per_frame_ == other.tokens_per_frame_ && d_model_ == other.d_model_;
  }

  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t tokens_per_frame_ = 0;
  std::size_t d_model_ = 0;
  std::vector<float> data_;
};

/// out[r][c] = sum_k a[r][k] * w[k][c], accumulated with k ascending.
void matmul(std::span<const float> a, std::size_t rows, std::size_t inner, std::span<const float> w,
            std::size_t cols, std::span<float> out);

/// Largest absolute elementwise difference; DimensionError on length mismatch.
float max_abs_diff(std::span<const float> a, std::span<const float> b);

}  // namespace chai::model
