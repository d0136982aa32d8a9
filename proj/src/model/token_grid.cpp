// SPDX-License-Identifier: Apache-2.0

#include "chai/model/token_grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "chai/common/error.hpp"

namespace chai::model {

TokenGrid::TokenGrid(std::size_t frames, std::size_t tokens_per_frame, std::size_t d_model, std::vector<float> data)
    : frames_(frames), tokens_per_frame_(tokens_per_frame), d_model_(d_model), data_(std::move(data)) {
  if (data_.size() != frames_ * tokens_per_frame_ * d_model_) {
    throw DimensionError("token grid data length " + std::to_string(data_.size()) + " != " +
                         std::to_string(frames_ * tokens_per_frame_ * d_model_));
  }
}

TokenGrid TokenGrid::zeros(std::size_t frames, std::size_t tokens_per_frame, std::size_t d_model) {
  return TokenGrid(frames, tokens_per_frame, d_model, std::vector<float>(frames * tokens_per_frame * d_model, 0.0f));
}

TokenGrid TokenGrid::from_latent(const cache::Latent& latent) {
  const auto& s = latent.shape();
  return TokenGrid(s.frames, s.tokens_per_frame, s.channels,
                   std::vector<float>(latent.data().begin(), latent.data().end()));
}

cache::Latent TokenGrid::to_latent(int step_index) const {
  return cache::Latent(cache::LatentShape{static_cast<std::uint32_t>(frames_),
                                          static_cast<std::uint32_t>(tokens_per_frame_),
                                          static_cast<std::uint32_t>(d_model_)},
                       step_index, data_);
}

void matmul(std::span<const float> a, std::size_t rows, std::size_t inner, std::span<const float> w,
            std::size_t cols, std::span<float> out) {
  if (a.size() != rows * inner || w.size() != inner * cols || out.size() != rows * cols) {
    throw DimensionError("matmul: operand sizes do not agree");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    float* o = out.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) o[c] = 0.0f;
    for (std::size_t k = 0; k < inner; ++k) {
      const float av = a[r * inner + k];
      const float* wr = w.data() + k * cols;
      for (std::size_t c = 0; c < cols; ++c) o[c] += av * wr[c];
    }
  }
}

float max_abs_diff(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw DimensionError("max_abs_diff: length mismatch");
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace chai::model
