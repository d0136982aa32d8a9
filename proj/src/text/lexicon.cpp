// SPDX-License-Identifier: Apache-2.0

#include "chai/text/lexicon.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chai::text {

namespace detail {
extern const std::string_view kShippedStopwords;
extern const std::string_view kShippedScenes;
extern const std::string_view kShippedVerbExceptions;
}  // namespace detail

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto begin = s.find_first_not_of(kSpace);
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(kSpace);
  return s.substr(begin, end - begin + 1);
}

}  // namespace

Lexicon Lexicon::parse(std::string_view contents) {
  Lexicon lex;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    auto eol = contents.find('\n', pos);
    if (eol == std::string_view::npos) eol = contents.size();
    std::string_view line = contents.substr(pos, eol - pos);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) lex.tokens_.emplace(line);
    pos = eol + 1;
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open lexicon file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const Lexicon& Lexicon::shipped_stopwords() {
  static const Lexicon lex = parse(detail::kShippedStopwords);
  return lex;
}

const Lexicon& Lexicon::shipped_scenes() {
  static const Lexicon lex = parse(detail::kShippedScenes);
  return lex;
}

const Lexicon& Lexicon::shipped_verb_exceptions() {
  static const Lexicon lex = parse(detail::kShippedVerbExceptions);
  return lex;
}

}  // namespace chai::text
