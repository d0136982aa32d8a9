// SPDX-License-Identifier: Apache-2.0

#include "chai/cache/cache_entry.hpp"

#include <stdexcept>
#include <string>

#include "chai/cache/latent_io.hpp"

namespace chai::cache {

std::size_t entry_size_bytes(const LatentShape& shape) {
  return kCachedSteps.size() * serialized_size(shape) + kEntryMetadataOverhead;
}

CacheEntry make_entry(EntryId id, std::string prompt_id, std::string prompt_text,
                      std::vector<std::string> entity_surfaces, LatentSet latents) {
  if (latents.size() != kCachedSteps.size()) {
    throw std::invalid_argument("cache entry needs exactly the latents of steps 2, 3, 4");
  }
  const Latent* first = nullptr;
  for (int step : kCachedSteps) {
    auto it = latents.find(step);
    if (it == latents.end() || !it->second) {
      throw std::invalid_argument("cache entry is missing the step " + std::to_string(step) + " latent");
    }
    if (it->second->step_index() != step) {
      throw std::invalid_argument("latent stored under step " + std::to_string(step) + " has step_index " +
                                  std::to_string(it->second->step_index()));
    }
    if (first && !(first->shape() == it->second->shape())) {
      throw std::invalid_argument("cached latents must share identical dims");
    }
    first = it->second.get();
  }
  CacheEntry e;
  e.entry_id = id;
  e.prompt_id = std::move(prompt_id);
  e.prompt_text = std::move(prompt_text);
  e.entity_surfaces = std::move(entity_surfaces);
  e.size_bytes = entry_size_bytes(first->shape());
  e.latents = std::move(latents);
  return e;
}

LatentSet placeholder_latents(const LatentShape& shape) {
  LatentSet set;
  for (int step : kCachedSteps) set.emplace(step, std::make_shared<const Latent>(Latent::zeros(shape, step)));
  return set;
}

}  // namespace chai::cache
