// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>

namespace chai::text {

/// A set of lowercase tokens read from a lexicon file: one token per line,
/// UTF-8, `#` starts a comment, blank lines ignored.
class Lexicon {
 public:
  Lexicon() = default;

  static Lexicon parse(std::string_view contents);
  static Lexicon load(const std::filesystem::path& path);

  /// Lexicons compiled into the library from data/lexicon/.
  static const Lexicon& shipped_stopwords();
  static const Lexicon& shipped_scenes();
  static const Lexicon& shipped_verb_exceptions();

  bool contains(std::string_view token) const { return tokens_.contains(std::string(token)); }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::unordered_set<std::string> tokens_;
};

}  // namespace chai::text
