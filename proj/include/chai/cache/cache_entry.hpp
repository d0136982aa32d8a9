// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "chai/cache/latent.hpp"

namespace chai::cache {

struct EntryId {
  std::uint64_t value = 0;

  friend auto operator<=>(const EntryId&, const EntryId&) = default;
};

/// Denoising steps whose block inputs are cached for every prompt.
inline constexpr std::array<int, 3> kCachedSteps{2, 3, 4};

/// Bytes charged per entry on top of the three serialized latents.
inline constexpr std::size_t kEntryMetadataOverhead = 256;

using LatentSet = std::map<int, std::shared_ptr<const Latent>>;

/// Per-prompt cache payload. Latents are shared and immutable, so copies of an
/// entry are cheap and never alias mutable state.
struct CacheEntry {
  EntryId entry_id;
  std::string prompt_id;
  std::string prompt_text;
  std::vector<std::string> entity_surfaces;
  LatentSet latents;
  std::size_t size_bytes = 0;
  std::uint64_t created_seq = 0;
  std::uint64_t last_access_seq = 0;
  std::uint64_t access_count = 0;
};

/// Size charged for an entry whose three latents all have `shape`.
std::size_t entry_size_bytes(const LatentShape& shape);

/// Builds an entry after checking that `latents` holds exactly steps 2, 3, 4
/// with identical shapes and matching step indices. Throws std::invalid_argument.
CacheEntry make_entry(EntryId id, std::string prompt_id, std::string prompt_text,
                      std::vector<std::string> entity_surfaces, LatentSet latents);

/// Three shared zero latents of `shape`, for size-accurate runs that skip the engine.
LatentSet placeholder_latents(const LatentShape& shape);

}  // namespace chai::cache

template <>
struct std::hash<chai::cache::EntryId> {
  std::size_t operator()(const chai::cache::EntryId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
