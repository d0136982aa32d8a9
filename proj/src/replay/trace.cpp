// SPDX-License-Identifier: Apache-2.0

#include "chai/replay/trace.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "chai/common/error.hpp"
#include "chai/common/rng.hpp"
#include "chai/text/entity.hpp"
#include "chai/text/lexicon.hpp"

namespace chai::replay {

namespace {

using nlohmann::json;

TraceRecord parse_record(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("expected a JSON object", line_no);

  auto field = [&](const char* name) -> const json& {
    auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field \"") + name + "\"", line_no);
    return *it;
  };
  TraceRecord r;
  const json& id = field("id");
  if (!id.is_string()) throw ParseError("field \"id\" must be a string", line_no);
  r.id = id.get<std::string>();
  const json& ts = field("timestamp");
  if (!ts.is_number_integer()) throw ParseError("field \"timestamp\" must be an integer", line_no);
  r.timestamp_ms = ts.get<std::int64_t>();
  const json& prompt = field("prompt");
  if (!prompt.is_string()) throw ParseError("field \"prompt\" must be a string", line_no);
  r.prompt = prompt.get<std::string>();
  return r;
}

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::size_t kSyllables = 14 * 5;

void append_syllable(std::string& out, std::size_t s) {
  out += kConsonants[s / kVowels.size()];
  out += kVowels[s % kVowels.size()];
}

// Scenes used by the generator; all are in the shipped scene lexicon.
constexpr std::array<std::string_view, 24> kTraceScenes = {
    "beach",  "forest", "city",    "kitchen", "desert", "mountain", "lake",   "river",
    "street", "garden", "park",    "village", "harbor", "island",   "castle", "temple",
    "studio", "office", "library", "market",  "valley", "meadow",   "cave",   "snow"};

// Every non-slot word is a stopword.
constexpr std::array<std::string_view, 6> kSceneLinks = {"on the", "in the", "near the", "at the", "by the",
                                                        "inside the"};

}  // namespace

std::vector<TraceRecord> parse_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    out.push_back(parse_record(line, line_no));
  }
  return out;
}

std::vector<TraceRecord> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace '" + path.string() + "'");
  return parse_trace(in);
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) {
    out << json{{"id", r.id}, {"timestamp", r.timestamp_ms}, {"prompt", r.prompt}}.dump() << '\n';
  }
}

void save_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace '" + path.string() + "'");
  write_trace(out, records);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string synthetic_object(std::size_t i) {
  static const text::EntityExtractor extractor;
  // 70^3 three-syllable words; 7919 is coprime to 70 so ranks map to distinct words.
  constexpr std::size_t kSpace = kSyllables * kSyllables * kSyllables;
  std::size_t code = (i % kSpace) * 7919 % kSpace;
  std::string word;
  for (int k = 0; k < 3; ++k) {
    append_syllable(word, code % kSyllables);
    code /= kSyllables;
  }
  // Ranks beyond the three-syllable space, and collisions with the lexicons,
  // get extra syllables.
  for (std::size_t extra = i / kSpace; extra > 0; extra /= kSyllables) append_syllable(word, extra % kSyllables);
  while (extractor.is_filtered(word) || extractor.classify(word) == text::EntityKind::scene) {
    append_syllable(word, i % kSyllables);
  }
  return word;
}

std::vector<TraceRecord> synthetic_trace(const SyntheticTraceOptions& options) {
  if (options.vocabulary == 0) throw std::invalid_argument("vocabulary must be positive");
  if (options.max_objects < 1) throw std::invalid_argument("max_objects must be >= 1");
  if (!(options.zipf_s >= 0.0)) throw std::invalid_argument("zipf_s must be >= 0");
  if (!(options.scene_probability >= 0.0 && options.scene_probability <= 1.0)) {
    throw std::invalid_argument("scene_probability must be in [0, 1]");
  }

  std::vector<std::string> words(options.vocabulary);
  std::vector<double> cdf(options.vocabulary);
  double total = 0.0;
  for (std::size_t i = 0; i < options.vocabulary; ++i) {
    words[i] = synthetic_object(i);
    total += 1.0 / std::pow(static_cast<double>(i + 1), options.zipf_s);
    cdf[i] = total;
  }

  SplitMix64 rng(options.seed);
  auto draw_object = [&]() -> const std::string& {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return words[std::min<std::size_t>(it - cdf.begin(), words.size() - 1)];
  };

  std::vector<TraceRecord> out;
  out.reserve(options.n_records);
  std::int64_t ts = 1'700'000'000'000;
  for (std::size_t n = 0; n < options.n_records; ++n) {
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(options.max_objects)));
    std::string prompt = "a " + draw_object();
    for (int j = 1; j < k; ++j) prompt += (j + 1 == k ? " and a " : ", a ") + draw_object();
    if (rng.uniform() < options.scene_probability) {
      prompt += ' ';
      prompt += kSceneLinks[rng.below(kSceneLinks.size())];
      prompt += ' ';
      prompt += kTraceScenes[rng.below(kTraceScenes.size())];
    }
    ts += 1 + static_cast<std::int64_t>(rng.below(5000));
    out.push_back(TraceRecord{"syn-" + std::to_string(n), ts, std::move(prompt)});
  }
  return out;
}

}  // namespace chai::replay
