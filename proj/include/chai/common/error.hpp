// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chai {

/// Shape or dimension disagreement between operands. Always a caller bug.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested cache entry does not exist (never stored, or already evicted).
class NotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// An entry that can never fit in the configured byte budget.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Malformed input file or message. `line()` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace chai
