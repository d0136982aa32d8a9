// SPDX-License-Identifier: Apache-2.0

#include "chai/common/hash.hpp"

#include <bit>
#include <cstring>

namespace chai {

std::uint64_t fnv1a64(std::span<const float> values, std::uint64_t h) {
  for (float v : values) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= kFnvPrime;
    }
  }
  return h;
}

}  // namespace chai
