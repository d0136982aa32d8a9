// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "chai/text/lexicon.hpp"

namespace chai::text {

struct Prompt {
  std::string id;
  std::string text;
  std::int64_t timestamp_ms = 0;
};

enum class EntityKind { object, scene, unknown };

std::string_view to_string(EntityKind kind);

struct Entity {
  std::string surface;
  EntityKind kind = EntityKind::unknown;

  friend bool operator==(const Entity&, const Entity&) = default;
};

/// Lexicon-and-suffix heuristic standing in for a part-of-speech tagger.
///
/// A token is dropped when it is shorter than two code points, appears in the
/// stopword lexicon, or looks like a verb form (ends in "-ing" with at least
/// five letters or "-ed" with at least four) and is not listed as a noun
/// exception. Survivors become entities in first-occurrence order; the scene
/// lexicon decides scene vs object.
class EntityExtractor {
 public:
  /// Uses the shipped lexicons.
  EntityExtractor();
  EntityExtractor(Lexicon stopwords, Lexicon scenes, Lexicon verb_exceptions);

  std::vector<Entity> extract(std::string_view text) const;

  /// True when a normalized token can never become an entity.
  bool is_filtered(std::string_view token) const;

  EntityKind classify(std::string_view token) const;

 private:
  Lexicon stopwords_;
  Lexicon scenes_;
  Lexicon verb_exceptions_;
};

/// extract() on a process-wide extractor built from the shipped lexicons.
std::vector<Entity> extract_entities(std::string_view text);

}  // namespace chai::text
