// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace chai::cache {

struct LatentShape {
  std::uint32_t frames = 0;
  std::uint32_t tokens_per_frame = 0;
  std::uint32_t channels = 0;

  std::size_t token_count() const { return std::size_t{frames} * tokens_per_frame; }
  std::size_t element_count() const { return token_count() * channels; }

  friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

/// A (frames x tokens_per_frame x channels) tensor captured at a 1-indexed
/// denoising step, stored row-major.
class Latent {
 public:
  /// Throws std::invalid_argument on a non-positive dim, step_index < 1, a
  /// data length that disagrees with the shape, or a non-finite value.
  Latent(LatentShape shape, int step_index, std::vector<float> data);

  static Latent zeros(LatentShape shape, int step_index);

  const LatentShape& shape() const { return shape_; }
  int step_index() const { return step_index_; }
  std::span<const float> data() const { return data_; }

  float at(std::size_t frame, std::size_t token, std::size_t channel) const {
    return data_[(frame * shape_.tokens_per_frame + token) * shape_.channels + channel];
  }

  friend bool operator==(const Latent&, const Latent&) = default;

 private:
  LatentShape shape_;
  int step_index_ = 1;
  std::vector<float> data_;
};

}  // namespace chai::cache
