// SPDX-License-Identifier: Apache-2.0

#include "chai/replay/replay.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace chai::replay {

ReplayReport replay(std::span<const TraceRecord> trace, const ReplayOptions& options) {
  if (options.warmup_n >= trace.size()) {
    throw std::invalid_argument("warmup_n (" + std::to_string(options.warmup_n) +
                                ") must be smaller than the trace length (" + std::to_string(trace.size()) + ")");
  }
  service::GenerationPipeline pipeline(options.pipeline);

  ReplayReport report;
  report.capacity_bytes = options.pipeline.cache.capacity_bytes;
  report.policy = options.pipeline.cache.policy;
  report.matching = options.pipeline.matching;
  report.warmup_n = options.warmup_n;

  double latency_sum = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const text::Prompt prompt{trace[i].id, trace[i].prompt, trace[i].timestamp_ms};
    if (i < options.warmup_n) {
      pipeline.generate_uncached(prompt);
      continue;
    }
    const service::Outcome out = pipeline.generate(prompt);
    ++(out.cache_hit ? report.hits : report.misses);
    latency_sum += out.modeled_latency_s;
  }

  report.n_prompts = trace.size() - options.warmup_n;
  report.hit_rate = static_cast<double>(report.hits) / static_cast<double>(report.n_prompts);
  report.mean_modeled_latency_s = latency_sum / static_cast<double>(report.n_prompts);
  const cache::CacheStats stats = pipeline.cache().stats();
  report.evictions = stats.evictions();
  report.writes = pipeline.writes();
  report.final_entries = stats.entries;
  return report;
}

std::vector<ReplayReport> sweep(std::span<const TraceRecord> trace, const SweepOptions& options) {
  if (options.sizes.empty()) throw std::invalid_argument("sweep needs at least one size");
  if (options.policies.empty()) throw std::invalid_argument("sweep needs at least one policy");
  if (options.matching_modes.empty()) throw std::invalid_argument("sweep needs at least one matching mode");

  std::vector<std::uint64_t> sizes = options.sizes;
  std::sort(sizes.begin(), sizes.end());

  std::vector<ReplayReport> rows;
  rows.reserve(sizes.size() * options.policies.size() * options.matching_modes.size());
  for (auto policy : options.policies) {
    for (auto matching : options.matching_modes) {
      for (auto size : sizes) {
        ReplayOptions point = options.base;
        point.pipeline.cache.capacity_bytes = size;
        point.pipeline.cache.policy = policy;
        point.pipeline.matching = matching;
        rows.push_back(replay(trace, point));
      }
    }
  }
  return rows;
}

std::string format_sweep_row(const ReplayReport& row) {
  return fmt::format("{},{},{},{:.6f},{:.6f},{}", row.capacity_bytes, cache::to_string(row.policy),
                     service::to_string(row.matching), row.hit_rate, row.mean_modeled_latency_s, row.evictions);
}

void write_sweep_csv(std::ostream& out, std::span<const ReplayReport> rows) {
  out << kSweepCsvHeader << '\n';
  for (const auto& row : rows) out << format_sweep_row(row) << '\n';
}

}  // namespace chai::replay
