// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "chai/cache/semantic_cache.hpp"
#include "chai/service/pipeline.hpp"

namespace chai::service {

// Newline-delimited JSON: one request object per line, one response per line.
//
//   {"op":"generate","request_id":"r1","prompt":"...",
//    "overrides":{"tau":0.7,"matching":"whole","n_steps_fast":8}}
//   {"op":"stats"}
//   {"op":"flush"}
//
// Every response carries "ok". Failures are {"ok":false,"request_id":...,"error":"..."}.

enum class Op { generate, stats, flush };

struct GenerateRequest {
  std::string request_id;
  std::string prompt;
  GenerateOverrides overrides;
};

struct Request {
  Op op = Op::generate;
  std::optional<std::string> request_id;
  GenerateRequest generate;
};

struct GenerateResponse {
  std::string request_id;
  bool cache_hit = false;
  engine::DiffusionMode mode = engine::DiffusionMode::full;
  std::optional<std::string> matched_entity;
  std::optional<float> match_score;
  std::optional<std::uint64_t> donor_entry_id;
  int steps_executed = 0;
  double modeled_latency_s = 0.0;
  /// Absent when the engine does not run.
  std::optional<std::uint64_t> latent_digest;
};

struct ServiceStats {
  cache::CacheStats cache;
  std::uint64_t capacity_bytes = 0;
  std::uint64_t requests = 0;
  std::uint64_t errors = 0;
  std::uint64_t generate_requests = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t writes = 0;
};

class ProtocolError : public std::invalid_argument {
 public:
  ProtocolError(const std::string& what, std::optional<std::string> request_id)
      : std::invalid_argument(what), request_id_(std::move(request_id)) {}
  const std::optional<std::string>& request_id() const { return request_id_; }

 private:
  std::optional<std::string> request_id_;
};

/// Throws ProtocolError; the request id is attached when it could be read.
Request parse_request(std::string_view line);

/// 16 lowercase hex digits.
std::string format_digest(std::uint64_t digest);

std::string to_json_line(const GenerateResponse& r);
std::string stats_json_line(const ServiceStats& s);
std::string flush_json_line(std::size_t removed);
std::string error_json_line(const std::optional<std::string>& request_id, std::string_view reason);

}  // namespace chai::service
