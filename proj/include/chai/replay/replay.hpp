// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "chai/cache/cache_config.hpp"
#include "chai/replay/trace.hpp"
#include "chai/service/pipeline.hpp"

namespace chai::replay {

struct ReplayOptions {
  service::PipelineConfig pipeline;
  /// Leading prompts that run the miss path unconditionally.
  std::size_t warmup_n = 100;
};

struct ReplayReport {
  std::uint64_t capacity_bytes = 0;
  cache::EvictionPolicy policy = cache::EvictionPolicy::lru;
  service::MatchingMode matching = service::MatchingMode::entity;
  std::size_t warmup_n = 0;
  /// Post-warmup prompts.
  std::size_t n_prompts = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
  double hit_rate = 0.0;
  /// Mean over post-warmup prompts.
  double mean_modeled_latency_s = 0.0;
  /// Evictions over the whole replay, warmup included.
  std::uint64_t evictions = 0;
  std::uint64_t writes = 0;
  std::size_t final_entries = 0;
};

/// Processes the trace in order through a fresh pipeline.
/// Throws std::invalid_argument unless warmup_n < trace.size().
ReplayReport replay(std::span<const TraceRecord> trace, const ReplayOptions& options);

struct SweepOptions {
  ReplayOptions base;
  std::vector<std::uint64_t> sizes;
  std::vector<cache::EvictionPolicy> policies;
  std::vector<service::MatchingMode> matching_modes;
};

/// One report per (policy, matching, size). Rows are grouped by policy, then
/// matching mode, in the given order; sizes ascend within a group.
/// Throws std::invalid_argument on an empty list.
std::vector<ReplayReport> sweep(std::span<const TraceRecord> trace, const SweepOptions& options);

inline constexpr std::string_view kSweepCsvHeader = "size_bytes,policy,matching,hit_rate,mean_latency_s,evictions";

/// Header plus one row per report; fixed precision so output is byte-stable.
void write_sweep_csv(std::ostream& out, std::span<const ReplayReport> rows);
std::string format_sweep_row(const ReplayReport& row);

}  // namespace chai::replay
