// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chai::text {

/// NFC-normalizes and lowercases `utf8`, then splits on every non-letter code
/// point. Invalid UTF-8 sequences act as separators. Returned tokens are UTF-8.
std::vector<std::string> tokenize(std::string_view utf8);

/// Number of Unicode code points in a valid UTF-8 string.
std::size_t code_point_count(std::string_view utf8);

}  // namespace chai::text
