// SPDX-License-Identifier: Apache-2.0

#include "chai/text/entity.hpp"

#include <unordered_set>

#include "chai/text/tokenize.hpp"

namespace chai::text {

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::object:
      return "object";
    case EntityKind::scene:
      return "scene";
    case EntityKind::unknown:
      break;
  }
  return "unknown";
}

EntityExtractor::EntityExtractor()
    : EntityExtractor(Lexicon::shipped_stopwords(), Lexicon::shipped_scenes(),
                      Lexicon::shipped_verb_exceptions()) {}

EntityExtractor::EntityExtractor(Lexicon stopwords, Lexicon scenes, Lexicon verb_exceptions)
    : stopwords_(std::move(stopwords)),
      scenes_(std::move(scenes)),
      verb_exceptions_(std::move(verb_exceptions)) {}

bool EntityExtractor::is_filtered(std::string_view token) const {
  if (code_point_count(token) < 2) return true;
  if (stopwords_.contains(token)) return true;
  if (verb_exceptions_.contains(token)) return false;
  if (token.size() >= 5 && token.ends_with("ing")) return true;
  if (token.size() >= 4 && token.ends_with("ed")) return true;
  return false;
}

EntityKind EntityExtractor::classify(std::string_view token) const {
  return scenes_.contains(token) ? EntityKind::scene : EntityKind::object;
}

std::vector<Entity> EntityExtractor::extract(std::string_view text) const {
  std::vector<Entity> entities;
  std::unordered_set<std::string> seen;
  for (auto& token : tokenize(text)) {
    if (is_filtered(token) || !seen.insert(token).second) continue;
    const EntityKind kind = classify(token);
    entities.push_back(Entity{std::move(token), kind});
  }
  return entities;
}

std::vector<Entity> extract_entities(std::string_view text) {
  static const EntityExtractor extractor;
  return extractor.extract(text);
}

}  // namespace chai::text
