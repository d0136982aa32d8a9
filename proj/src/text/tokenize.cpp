// SPDX-License-Identifier: Apache-2.0

#include "chai/text/tokenize.hpp"

#include <stdexcept>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace chai::text {

namespace {

const icu::Normalizer2& nfc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
    return n;
  }();
  return *instance;
}

icu::UnicodeString normalize(const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(s, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view utf8) {
  // Invalid sequences decode to U+FFFD, which is not a letter.
  icu::UnicodeString text =
      icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  text = normalize(text);
  text.toLower(icu::Locale::getRoot());
  // Lowercasing can denormalize (e.g. U+0130); re-compose so the output is a fixed point.
  text = normalize(text);

  std::vector<std::string> tokens;
  icu::UnicodeString current;
  auto flush = [&] {
    if (current.isEmpty()) return;
    std::string out;
    current.toUTF8String(out);
    tokens.push_back(std::move(out));
    current.remove();
  };
  for (int32_t i = 0; i < text.length(); i = text.moveIndex32(i, 1)) {
    const UChar32 cp = text.char32At(i);
    // Combining marks stay attached to the letter they follow.
    const bool mark = (U_GET_GC_MASK(cp) & U_GC_M_MASK) != 0;
    if (u_isalpha(cp) || (mark && !current.isEmpty())) {
      current.append(cp);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::size_t code_point_count(std::string_view utf8) {
  std::size_t n = 0;
  for (char c : utf8) {
    if ((static_cast<unsigned char>(c) & 0xc0) != 0x80) ++n;
  }
  return n;
}

}  // namespace chai::text
