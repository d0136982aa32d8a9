// SPDX-License-Identifier: Apache-2.0

#include "chai/service/protocol.hpp"

#include <fmt/format.h>
#include <json.hpp>

namespace chai::service {

namespace {

using nlohmann::json;

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

}  // namespace

Request parse_request(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw ProtocolError("malformed JSON", std::nullopt);
  }
  if (!j.is_object()) throw ProtocolError("request must be a JSON object", std::nullopt);

  Request req;
  if (auto it = j.find("request_id"); it != j.end()) {
    if (!it->is_string()) throw ProtocolError("\"request_id\" must be a string", std::nullopt);
    req.request_id = it->get<std::string>();
  }
  auto fail = [&](const std::string& what) -> ProtocolError { return ProtocolError(what, req.request_id); };

  auto op = j.find("op");
  if (op == j.end()) throw fail("missing \"op\"");
  if (!op->is_string()) throw fail("\"op\" must be a string");
  const std::string op_name = op->get<std::string>();
  if (op_name == "stats") {
    req.op = Op::stats;
    return req;
  }
  if (op_name == "flush") {
    req.op = Op::flush;
    return req;
  }
  if (op_name != "generate") throw fail("unknown op \"" + op_name + "\"");

  req.op = Op::generate;
  if (!req.request_id || req.request_id->empty()) throw fail("generate needs a non-empty \"request_id\"");
  req.generate.request_id = *req.request_id;
  auto prompt = j.find("prompt");
  if (prompt == j.end()) throw fail("missing \"prompt\"");
  if (!prompt->is_string()) throw fail("\"prompt\" must be a string");
  req.generate.prompt = prompt->get<std::string>();

  if (auto ov = j.find("overrides"); ov != j.end() && !ov->is_null()) {
    if (!ov->is_object()) throw fail("\"overrides\" must be an object");
    for (const auto& [key, value] : ov->items()) {
      if (key == "tau") {
        if (!value.is_number()) throw fail("overrides.tau must be a number");
        const double tau = value.get<double>();
        if (!(tau > 0.0 && tau <= 1.0)) throw fail("overrides.tau must be in (0, 1]");
        req.generate.overrides.tau = static_cast<float>(tau);
      } else if (key == "matching" || key == "matching_mode") {
        if (!value.is_string()) throw fail("overrides.matching must be a string");
        try {
          req.generate.overrides.matching = parse_matching(value.get<std::string>());
        } catch (const std::invalid_argument& e) {
          throw fail(e.what());
        }
      } else if (key == "n_steps_fast") {
        if (!value.is_number_integer()) throw fail("overrides.n_steps_fast must be an integer");
        const auto n = value.get<std::int64_t>();
        if (n < 1 || n > 1'000'000) throw fail("overrides.n_steps_fast out of range");
        req.generate.overrides.n_steps_fast = static_cast<int>(n);
      } else {
        throw fail("unknown override \"" + key + "\"");
      }
    }
  }
  return req;
}

std::string format_digest(std::uint64_t digest) { return fmt::format("{:016x}", digest); }

std::string to_json_line(const GenerateResponse& r) {
  json j = {{"ok", true},
            {"request_id", r.request_id},
            {"cache_hit", r.cache_hit},
            {"mode", std::string(engine::to_string(r.mode))}};
  if (r.matched_entity) j["matched_entity"] = *r.matched_entity;
  if (r.match_score) j["match_score"] = static_cast<double>(*r.match_score);
  if (r.donor_entry_id) j["donor_entry_id"] = *r.donor_entry_id;
  j["steps_executed"] = r.steps_executed;
  j["modeled_latency_s"] = r.modeled_latency_s;
  if (r.latent_digest) j["latent_digest"] = format_digest(*r.latent_digest);
  return dump_line(j);
}

std::string stats_json_line(const ServiceStats& s) {
  json evictions = json::object();
  for (std::size_t i = 0; i < cache::kPolicyCount; ++i) {
    evictions[std::string(cache::to_string(static_cast<cache::EvictionPolicy>(i)))] = s.cache.evictions_by_policy[i];
  }
  json j = {{"ok", true},
            {"op", "stats"},
            {"requests", s.requests},
            {"errors", s.errors},
            {"generate_requests", s.generate_requests},
            {"hits", s.hits},
            {"misses", s.misses},
            {"writes", s.writes},
            {"cache",
             {{"entries", s.cache.entries},
              {"bytes_used", s.cache.bytes_used},
              {"capacity_bytes", s.capacity_bytes},
              {"lookup_hits", s.cache.hits},
              {"lookup_misses", s.cache.misses},
              {"puts", s.cache.puts},
              {"evictions", s.cache.evictions()},
              {"evictions_by_policy", evictions}}}};
  return dump_line(j);
}

std::string flush_json_line(std::size_t removed) {
  return dump_line(json{{"ok", true}, {"op", "flush"}, {"removed", removed}});
}

std::string error_json_line(const std::optional<std::string>& request_id, std::string_view reason) {
  json j = {{"ok", false}};
  j["request_id"] = request_id ? json(*request_id) : json(nullptr);
  j["error"] = std::string(reason);
  return dump_line(j);
}

}  // namespace chai::service
