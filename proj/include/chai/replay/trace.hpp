// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace chai::replay {

struct TraceRecord {
  std::string id;
  std::int64_t timestamp_ms = 0;
  std::string prompt;

  bool operator==(const TraceRecord&) const = default;
};

/// JSON Lines with fields id (string), timestamp (integer ms), prompt (string).
/// Blank lines are skipped. Throws ParseError naming the 1-based line.
std::vector<TraceRecord> parse_trace(std::istream& in);

/// Throws std::runtime_error when the file cannot be opened.
std::vector<TraceRecord> load_trace(const std::filesystem::path& path);

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records);
void save_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& records);

struct SyntheticTraceOptions {
  std::size_t n_records = 100000;
  /// Number of distinct object words.
  std::size_t vocabulary = 400;
  /// Zipf exponent for object popularity.
  double zipf_s = 1.0;
  /// Objects per prompt are drawn uniformly from [1, max_objects].
  int max_objects = 2;
  /// Probability that a prompt names a scene.
  double scene_probability = 0.3;
  std::uint64_t seed = 1;
};

/// Deterministic workload over pseudo-word objects and shipped scenes.
/// Every word outside the object/scene slots is a stopword, so the extracted
/// entities are exactly the drawn ones.
std::vector<TraceRecord> synthetic_trace(const SyntheticTraceOptions& options);

/// The pseudo-word for object rank `i` (0 is the most popular).
std::string synthetic_object(std::size_t i);

}  // namespace chai::replay
