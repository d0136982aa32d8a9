// SPDX-License-Identifier: Apache-2.0

#include "chai/service/service.hpp"

#include <exception>
#include <stdexcept>

namespace chai::service {

CacheService::CacheService(PipelineConfig config) : pipeline_(std::move(config)) {}

GenerateResponse CacheService::handle_generate(const GenerateRequest& req) {
  if (req.request_id.empty()) throw std::invalid_argument("request_id must be non-empty");
  const text::Prompt prompt{req.request_id, req.prompt, 0};
  const Outcome out = pipeline_.generate(prompt, req.overrides);

  GenerateResponse r;
  r.request_id = req.request_id;
  r.cache_hit = out.cache_hit;
  r.mode = out.mode;
  if (out.cache_hit) {
    r.matched_entity = out.match->matched_key;
    r.match_score = out.match->score;
    r.donor_entry_id = out.match->entry_id.value;
  }
  r.steps_executed = out.steps_executed;
  r.modeled_latency_s = out.modeled_latency_s;
  r.latent_digest = out.latent_digest;

  generate_requests_.fetch_add(1);
  (out.cache_hit ? hits_ : misses_).fetch_add(1);
  return r;
}

ServiceStats CacheService::handle_stats() const {
  ServiceStats s;
  s.cache = pipeline_.cache().stats();
  s.capacity_bytes = pipeline_.config().cache.capacity_bytes;
  s.requests = requests_.load();
  s.errors = errors_.load();
  s.generate_requests = generate_requests_.load();
  s.hits = hits_.load();
  s.misses = misses_.load();
  s.writes = pipeline_.writes();
  return s;
}

std::size_t CacheService::handle_flush() { return pipeline_.flush(); }

std::string CacheService::handle_line(std::string_view line) {
  requests_.fetch_add(1);
  std::optional<std::string> request_id;
  try {
    const Request req = parse_request(line);
    request_id = req.request_id;
    switch (req.op) {
      case Op::generate:
        return to_json_line(handle_generate(req.generate));
      case Op::stats:
        return stats_json_line(handle_stats());
      case Op::flush:
        return flush_json_line(handle_flush());
    }
    throw std::logic_error("unhandled op");
  } catch (const ProtocolError& e) {
    errors_.fetch_add(1);
    return error_json_line(e.request_id(), e.what());
  } catch (const std::exception& e) {
    errors_.fetch_add(1);
    return error_json_line(request_id, e.what());
  }
}

}  // namespace chai::service
