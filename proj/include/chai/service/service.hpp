// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>

#include "chai/service/pipeline.hpp"
#include "chai/service/protocol.hpp"

namespace chai::service {

/// Request handlers over one GenerationPipeline. Safe to call from many
/// connection threads at once.
class CacheService {
 public:
  explicit CacheService(PipelineConfig config);

  /// Throws std::invalid_argument for an empty request id or a bad override;
  /// engine and cache errors propagate. Nothing is written before validation.
  GenerateResponse handle_generate(const GenerateRequest& req);
  ServiceStats handle_stats() const;
  std::size_t handle_flush();

  /// One protocol line in, one response line out (no trailing newline).
  /// Never throws: failures become {"ok":false,...}.
  std::string handle_line(std::string_view line);

  GenerationPipeline& pipeline() { return pipeline_; }

 private:
  GenerationPipeline pipeline_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> errors_{0};
  std::atomic<std::uint64_t> generate_requests_{0};
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

}  // namespace chai::service
