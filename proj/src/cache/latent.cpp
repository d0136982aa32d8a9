// SPDX-License-Identifier: Apache-2.0

#include "chai/cache/latent.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chai::cache {

Latent::Latent(LatentShape shape, int step_index, std::vector<float> data)
    : shape_(shape), step_index_(step_index), data_(std::move(data)) {
  if (shape_.frames == 0 || shape_.tokens_per_frame == 0 || shape_.channels == 0) {
    throw std::invalid_argument("latent dims must be positive");
  }
  if (step_index_ < 1) throw std::invalid_argument("latent step_index must be >= 1");
  if (data_.size() != shape_.element_count()) {
    throw std::invalid_argument("latent data length " + std::to_string(data_.size()) + " != " +
                                std::to_string(shape_.element_count()));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw std::invalid_argument("latent contains a non-finite value");
  }
}

Latent Latent::zeros(LatentShape shape, int step_index) {
  return Latent(shape, step_index, std::vector<float>(shape.element_count(), 0.0f));
}

}  // namespace chai::cache
