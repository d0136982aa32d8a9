// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "chai/cache/cache_entry.hpp"
#include "chai/common/error.hpp"
#include "chai/replay/trace.hpp"
#include "chai/service/config.hpp"
#include "chai/service/protocol.hpp"
#include "chai/service/server.hpp"
#include "chai/service/service.hpp"

using namespace chai;
using namespace chai::service;
using nlohmann::json;

namespace {

constexpr const char* kParty = "A party on a beach";
constexpr const char* kCoastal = "A beautiful coastal beach in spring, waves lapping on sand";
constexpr const char* kCar = "A red car is speeding on the highway at night";

std::uint64_t model_entry() { return cache::entry_size_bytes(engine::ModelDims{}.latent_shape()); }

json gen(CacheService& s, const std::string& id, const std::string& prompt, json overrides = nullptr) {
  json req = {{"op", "generate"}, {"request_id", id}, {"prompt", prompt}};
  if (!overrides.is_null()) req["overrides"] = overrides;
  return json::parse(s.handle_line(req.dump()));
}

json stats(CacheService& s) { return json::parse(s.handle_line(R"({"op":"stats"})")); }

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         (name + "-" + std::to_string(::getpid()) + "-" +
          std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000));
}

}  // namespace

// ---- request flow -------------------------------------------------------------

TEST(Service, ColdRequestMissesAndWritesOnce) {
  CacheService s{PipelineConfig{}};
  const json r = gen(s, "r1", kParty);
  EXPECT_TRUE(r["ok"]);
  EXPECT_EQ(r["request_id"], "r1");
  EXPECT_FALSE(r["cache_hit"]);
  EXPECT_EQ(r["mode"], "full");
  EXPECT_EQ(r["steps_executed"], 30);
  EXPECT_DOUBLE_EQ(r["modeled_latency_s"].get<double>(), 12.59);
  EXPECT_FALSE(r.contains("matched_entity"));
  EXPECT_EQ(r["latent_digest"].get<std::string>().size(), 16u);
  const json st = stats(s);
  EXPECT_EQ(st["cache"]["entries"], 1);
  EXPECT_EQ(st["writes"], 1);
  EXPECT_EQ(st["cache"]["bytes_used"], model_entry());
}

TEST(Service, RepeatHitsWithFastMode) {
  CacheService s{PipelineConfig{}};
  gen(s, "r1", kParty);
  const json r = gen(s, "r2", kParty);
  EXPECT_TRUE(r["cache_hit"]);
  EXPECT_EQ(r["mode"], "fast");
  EXPECT_EQ(r["steps_executed"], 8);
  EXPECT_FLOAT_EQ(r["match_score"].get<float>(), 1.0f);
  EXPECT_DOUBLE_EQ(r["modeled_latency_s"].get<double>(), 3.75);
  EXPECT_EQ(stats(s)["writes"], 1);
}

TEST(Service, SharedEntityTriggersHit) {
  CacheService s{PipelineConfig{}};
  const json first = gen(s, "r1", kParty);
  const json r = gen(s, "r2", kCoastal);
  EXPECT_TRUE(r["cache_hit"]);
  EXPECT_EQ(r["matched_entity"], "beach");
  EXPECT_GE(r["match_score"].get<float>(), 0.8f);
  EXPECT_EQ(r["donor_entry_id"], 1);
  const json other = gen(s, "r3", kCar);
  EXPECT_FALSE(other["cache_hit"]);
}

TEST(Service, WholePromptOverrideMissesOnParaphrase) {
  CacheService s{PipelineConfig{}};
  gen(s, "r1", kParty);
  EXPECT_FALSE(gen(s, "r2", kCoastal, {{"matching", "whole"}})["cache_hit"]);
  EXPECT_TRUE(gen(s, "r3", kParty, {{"matching", "whole_prompt"}})["cache_hit"]);
}

TEST(Service, OverridesChangeTheRun) {
  CacheService s{PipelineConfig{}};
  gen(s, "r1", kParty);
  const json r = gen(s, "r2", kParty, {{"n_steps_fast", 12}});
  EXPECT_EQ(r["steps_executed"], 12);
  EXPECT_DOUBLE_EQ(r["modeled_latency_s"].get<double>(), 3.75 * 12 / 8);
  const json exact = gen(s, "r3", "a beach", {{"tau", 1.0}});
  EXPECT_TRUE(exact["cache_hit"]);
  EXPECT_EQ(exact["matched_entity"], "beach");
  EXPECT_FALSE(gen(s, "r4", kCar, {{"tau", 1.0}})["cache_hit"]);
}

TEST(Service, StatsAreConsistent) {
  CacheService s{PipelineConfig{}};
  const json fresh = stats(s);
  EXPECT_EQ(fresh["hits"], 0);
  EXPECT_EQ(fresh["misses"], 0);
  EXPECT_EQ(fresh["cache"]["entries"], 0);
  EXPECT_EQ(fresh["cache"]["bytes_used"], 0);
  const auto trace = replay::synthetic_trace({.n_records = 25, .seed = 4});
  for (const auto& rec : trace) gen(s, rec.id, rec.prompt);
  const json st = stats(s);
  EXPECT_EQ(st["hits"].get<int>() + st["misses"].get<int>(), 25);
  EXPECT_EQ(st["generate_requests"], 25);
  EXPECT_EQ(st["writes"], st["misses"]);
  EXPECT_EQ(st["cache"]["bytes_used"], s.pipeline().cache().stats().bytes_used);
  EXPECT_EQ(st["cache"]["entries"].get<std::uint64_t>() * model_entry(), st["cache"]["bytes_used"].get<std::uint64_t>());
  EXPECT_EQ(st["requests"], 27);
}

TEST(Service, HitAndModeAreCoupled) {
  PipelineConfig cfg;
  cfg.cache.capacity_bytes = model_entry() * 6;
  CacheService s{cfg};
  const auto trace = replay::synthetic_trace({.n_records = 60, .seed = 9});
  std::uint64_t misses = 0;
  for (const auto& rec : trace) {
    const json r = gen(s, rec.id, rec.prompt);
    EXPECT_EQ(r["cache_hit"].get<bool>(), r["mode"] == "fast");
    EXPECT_EQ(r["cache_hit"].get<bool>(), r.contains("matched_entity"));
    EXPECT_EQ(r["steps_executed"], r["cache_hit"].get<bool>() ? 8 : 30);
    if (!r["cache_hit"].get<bool>()) ++misses;
    EXPECT_LE(s.pipeline().cache().stats().bytes_used, cfg.cache.capacity_bytes);
  }
  EXPECT_EQ(stats(s)["writes"], misses);
}

TEST(Service, FlushIsIdempotent) {
  CacheService s{PipelineConfig{}};
  gen(s, "r1", kParty);
  gen(s, "r2", kCar);
  EXPECT_EQ(json::parse(s.handle_line(R"({"op":"flush"})"))["removed"], 2);
  EXPECT_EQ(json::parse(s.handle_line(R"({"op":"flush"})"))["removed"], 0);
  const json st = stats(s);
  EXPECT_EQ(st["cache"]["entries"], 0);
  EXPECT_EQ(st["cache"]["bytes_used"], 0);
  EXPECT_FALSE(gen(s, "r3", kParty)["cache_hit"]);
  EXPECT_TRUE(gen(s, "r4", kParty)["cache_hit"]);
}

TEST(Service, MalformedRequestsLeaveStateUnchanged) {
  CacheService s{PipelineConfig{}};
  gen(s, "r1", kParty);
  const auto before = s.pipeline().cache().stats();
  const std::vector<std::string> bad = {
      "not json",
      "[]",
      R"({"prompt":"x"})",
      R"({"op":"dance"})",
      R"({"op":"generate","prompt":"x"})",
      R"({"op":"generate","request_id":"","prompt":"x"})",
      R"({"op":"generate","request_id":"b1"})",
      R"({"op":"generate","request_id":"b2","prompt":5})",
      R"({"op":"generate","request_id":"b3","prompt":"x","overrides":{"tau":0}})",
      R"({"op":"generate","request_id":"b4","prompt":"x","overrides":{"tau":1.5}})",
      R"({"op":"generate","request_id":"b5","prompt":"x","overrides":{"matching":"fuzzy"}})",
      R"({"op":"generate","request_id":"b6","prompt":"x","overrides":{"n_steps_fast":0}})",
      R"({"op":"generate","request_id":"b7","prompt":"x","overrides":{"n_steps_fast":30}})",
      R"({"op":"generate","request_id":"b8","prompt":"x","overrides":{"colour":"red"}})",
  };
  for (const auto& line : bad) {
    const json r = json::parse(s.handle_line(line));
    EXPECT_FALSE(r["ok"]) << line;
    EXPECT_TRUE(r["error"].is_string()) << line;
  }
  EXPECT_TRUE(json::parse(s.handle_line("not json"))["request_id"].is_null());
  EXPECT_EQ(json::parse(s.handle_line(bad[8]))["request_id"], "b3");
  const auto after = s.pipeline().cache().stats();
  EXPECT_EQ(after.entries, before.entries);
  EXPECT_EQ(after.puts, before.puts);
  EXPECT_EQ(after.bytes_used, before.bytes_used);
  EXPECT_EQ(stats(s)["errors"], bad.size() + 2);
  EXPECT_EQ(stats(s)["writes"], 1);
}

TEST(Service, InvalidUtf8IsReplacedNotFatal) {
  CacheService s{PipelineConfig{}};
  GenerateRequest req{"bad\xff", "a kite", {}};
  const std::string line = to_json_line(s.handle_generate(req));
  json parsed;
  EXPECT_NO_THROW(parsed = json::parse(line));
  EXPECT_TRUE(parsed["ok"]);
}

TEST(Service, ResponseStreamIsDeterministic) {
  const auto trace = replay::synthetic_trace({.n_records = 50, .seed = 6});
  auto run = [&] {
    PipelineConfig cfg;
    cfg.cache.capacity_bytes = model_entry() * 10;
    CacheService s{cfg};
    std::string out;
    for (const auto& rec : trace) {
      out += s.handle_line(json{{"op", "generate"}, {"request_id", rec.id}, {"prompt", rec.prompt}}.dump());
      out += '\n';
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Service, ConcurrentRequestsKeepCountersExact) {
  PipelineConfig cfg;
  cfg.exec_engine = false;
  cfg.cache.capacity_bytes = model_entry() * 12;
  CacheService s{cfg};
  const auto trace = replay::synthetic_trace({.n_records = 400, .seed = 8});
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < trace.size(); i += 4) gen(s, trace[i].id, trace[i].prompt);
    });
  }
  for (auto& th : threads) th.join();
  const json st = stats(s);
  EXPECT_EQ(st["hits"].get<int>() + st["misses"].get<int>(), 400);
  EXPECT_EQ(st["writes"], st["misses"]);
  EXPECT_EQ(st["cache"]["puts"], st["writes"]);
  EXPECT_LE(st["cache"]["bytes_used"].get<std::uint64_t>(), cfg.cache.capacity_bytes);
  EXPECT_EQ(st["cache"]["entries"].get<std::uint64_t>() + st["cache"]["evictions"].get<std::uint64_t>(),
            st["writes"].get<std::uint64_t>());
}

// ---- protocol ------------------------------------------------------------------

TEST(Protocol, ParsesRequests) {
  const Request g = parse_request(
      R"({"op":"generate","request_id":"x","prompt":"p","overrides":{"tau":0.7,"matching":"whole","n_steps_fast":6}})");
  EXPECT_EQ(g.op, Op::generate);
  EXPECT_EQ(g.generate.request_id, "x");
  EXPECT_FLOAT_EQ(*g.generate.overrides.tau, 0.7f);
  EXPECT_EQ(*g.generate.overrides.matching, MatchingMode::whole_prompt);
  EXPECT_EQ(*g.generate.overrides.n_steps_fast, 6);
  EXPECT_EQ(parse_request(R"({"op":"stats"})").op, Op::stats);
  EXPECT_EQ(parse_request(R"({"op":"flush","request_id":"f"})").request_id, "f");
  try {
    parse_request(R"({"op":"generate","request_id":"q9","prompt":"p","overrides":{"tau":"high"}})");
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.request_id(), "q9");
  }
}

TEST(Protocol, Formatting) {
  EXPECT_EQ(format_digest(0xabcULL), "0000000000000abc");
  const json e = json::parse(error_json_line(std::nullopt, "bad"));
  EXPECT_FALSE(e["ok"]);
  EXPECT_TRUE(e["request_id"].is_null());
  const json f = json::parse(flush_json_line(3));
  EXPECT_EQ(f["removed"], 3);
  GenerateResponse miss;
  miss.request_id = "m";
  const json m = json::parse(to_json_line(miss));
  EXPECT_FALSE(m.contains("match_score"));
  EXPECT_FALSE(m.contains("donor_entry_id"));
}

// ---- config ----------------------------------------------------------------------

TEST(Config, ParsesKeyValueFile) {
  std::istringstream in(
      "# service\n"
      "capacity_bytes = 1048576\n"
      "policy = LFU\n"
      "tau_entity = 0.75  # looser\n"
      "matching = whole\n"
      "n_steps_fast = 6\n"
      "t_lookup = 0.01\n"
      "listen = unix:/tmp/chai.sock\n"
      "exec_engine = false\n"
      "\n");
  const ServiceConfig c = parse_service_config(in);
  EXPECT_EQ(c.pipeline.cache.capacity_bytes, 1048576u);
  EXPECT_EQ(c.pipeline.cache.policy, cache::EvictionPolicy::lfu);
  EXPECT_FLOAT_EQ(c.pipeline.cache.tau_entity, 0.75f);
  EXPECT_EQ(c.pipeline.matching, MatchingMode::whole_prompt);
  EXPECT_EQ(c.pipeline.n_steps_fast, 6);
  EXPECT_DOUBLE_EQ(c.pipeline.latency.t_lookup, 0.01);
  EXPECT_EQ(c.listen.kind, ListenAddress::Kind::unix_socket);
  EXPECT_EQ(c.listen.path, "/tmp/chai.sock");
  EXPECT_FALSE(c.pipeline.exec_engine);
}

TEST(Config, ShippedSampleLoads) {
  const ServiceConfig c = load_service_config(std::filesystem::path(CHAI_FIXTURE_DIR) / "../../data/chai.conf");
  EXPECT_EQ(c.listen.to_string(), "127.0.0.1:7070");
  EXPECT_EQ(c.pipeline.cache.capacity_bytes, 1ULL << 30);
  EXPECT_EQ(c.pipeline.n_steps_full, 30);
  EXPECT_THROW(load_service_config("/nonexistent/chai.conf"), std::runtime_error);
}

TEST(Config, ErrorsCarryLineNumbers) {
  const std::vector<std::pair<std::string, std::size_t>> cases = {
      {"policy = lru\nbogus = 1\n", 2},
      {"\n\ncapacity_bytes = lots\n", 3},
      {"tau_entity 0.5\n", 1},
      {"policy = mru\n", 1},
  };
  for (const auto& [text, line] : cases) {
    std::istringstream in(text);
    try {
      parse_service_config(in);
      FAIL() << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << text;
    }
  }
  std::istringstream invalid("tau_entity = 1.5\n");
  EXPECT_THROW(parse_service_config(invalid), std::invalid_argument);
  std::istringstream tiny("capacity_bytes = 100\n");
  EXPECT_THROW(parse_service_config(tiny), std::invalid_argument);
}

TEST(Config, EnvironmentOverridesPath) {
  ::unsetenv(kConfigPathEnv);
  EXPECT_EQ(resolve_config_path(std::nullopt), std::nullopt);
  EXPECT_EQ(resolve_config_path(std::filesystem::path("a.conf")), std::filesystem::path("a.conf"));
  ::setenv(kConfigPathEnv, "/etc/chai/env.conf", 1);
  EXPECT_EQ(resolve_config_path(std::filesystem::path("a.conf")), std::filesystem::path("/etc/chai/env.conf"));
  ::unsetenv(kConfigPathEnv);
}

TEST(Config, ListenAddresses) {
  const auto tcp = ListenAddress::parse("0.0.0.0:9000");
  EXPECT_EQ(tcp.kind, ListenAddress::Kind::tcp);
  EXPECT_EQ(tcp.port, 9000);
  EXPECT_EQ(tcp.to_string(), "0.0.0.0:9000");
  EXPECT_EQ(ListenAddress::parse("unix:/run/x.sock").to_string(), "unix:/run/x.sock");
  EXPECT_THROW(ListenAddress::parse("nohost"), std::invalid_argument);
  EXPECT_THROW(ListenAddress::parse("h:99999"), std::invalid_argument);
}

// ---- sockets ---------------------------------------------------------------------

class SocketTest : public ::testing::TestWithParam<bool> {};

TEST_P(SocketTest, ServesNewlineDelimitedJson) {
  PipelineConfig cfg;
  cfg.exec_engine = false;
  CacheService s{cfg};
  ListenAddress addr;
  const auto sock = temp_path("chai-test.sock");
  if (GetParam()) {
    addr = ListenAddress::parse("unix:" + sock.string());
  } else {
    addr = ListenAddress::parse("127.0.0.1:0");
  }
  LineServer server(s, addr);
  if (!GetParam()) {
    EXPECT_NE(server.address().port, 0);
  }
  server.start();
  {
    LineClient a(server.address());
    LineClient b(server.address());
    const json r1 = json::parse(a.request(json{{"op", "generate"}, {"request_id", "s1"}, {"prompt", kParty}}.dump()));
    EXPECT_FALSE(r1["cache_hit"]);
    const json r2 = json::parse(b.request(json{{"op", "generate"}, {"request_id", "s2"}, {"prompt", kCoastal}}.dump()));
    EXPECT_TRUE(r2["cache_hit"]);
    EXPECT_EQ(r2["request_id"], "s2");
    EXPECT_FALSE(json::parse(a.request("{oops"))["ok"]);
    const json st = json::parse(b.request(R"({"op":"stats"})"));
    EXPECT_EQ(st["hits"], 1);
    EXPECT_EQ(st["misses"], 1);
    EXPECT_EQ(st["errors"], 1);
  }
  server.stop();
  server.stop();
  if (GetParam()) std::filesystem::remove(sock);
}

INSTANTIATE_TEST_SUITE_P(Transports, SocketTest, ::testing::Values(false, true),
                         [](const auto& info) { return info.param ? "unix" : "tcp"; });
