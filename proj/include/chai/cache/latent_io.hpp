// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "chai/cache/latent.hpp"

namespace chai::cache {

// Little-endian layout:
//   "CHAI" | u16 version | u16 step_index | u32 frames | u32 tokens_per_frame
//   | u32 channels | f32 data[frames * tokens_per_frame * channels]
inline constexpr std::uint16_t kLatentFormatVersion = 1;
inline constexpr std::size_t kLatentHeaderBytes = 20;

std::size_t serialized_size(const LatentShape& shape);

std::vector<std::byte> serialize(const Latent& latent);

/// Throws ParseError on bad magic, unknown version, truncation or trailing bytes.
Latent deserialize(std::span<const std::byte> bytes);

void write_latent_file(const std::filesystem::path& path, const Latent& latent);
Latent read_latent_file(const std::filesystem::path& path);

}  // namespace chai::cache
