// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>

#include <fmt/core.h>
#include <json.hpp>

#include "chai/cache/cache_config.hpp"
#include "chai/cache/cache_entry.hpp"
#include "chai/common/rng.hpp"
#include "chai/engine/denoiser.hpp"
#include "chai/engine/flow_schedule.hpp"
#include "chai/model/attention.hpp"
#include "chai/model/stdit_block.hpp"
#include "chai/replay/latency.hpp"
#include "chai/replay/replay.hpp"
#include "chai/replay/trace.hpp"
#include "chai/service/service.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace chai;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

model::TokenGrid random_grid(SplitMix64& rng, std::size_t frames, std::size_t tpf, std::size_t d) {
  std::vector<float> data(frames * tpf * d);
  for (float& v : data) v = static_cast<float>(rng.gaussian());
  return model::TokenGrid(frames, tpf, d, std::move(data));
}

std::uint64_t model_entry() { return cache::entry_size_bytes(engine::ModelDims{}.latent_shape()); }

Outcome capacity_math() {
  const std::uint64_t gib = 1ULL << 30;
  const auto entry = static_cast<std::uint64_t>(1.3 * 1024 * 1024);
  const auto n = cache::capacity_entries(gib, entry);
  const double rel = std::abs(static_cast<double>(n) - 780.0) / 780.0;
  return {n == 787 && rel < 0.01, fmt::format("capacity_entries(1 GiB, 1.3 MiB) = {}, {:.2f}% from 780", n, rel * 100)};
}

Outcome speedup_identity() {
  const replay::LatencyModel lat{12.59, 3.75, 0.0};
  const double s = replay::expected_latency(0.0, lat) / replay::expected_latency(1.0, lat);
  return {std::abs(s - 3.357) < 5e-4 && std::abs(s - 3.35) <= 0.01, fmt::format("speedup = {:.4f} (3.35 +- 0.01)", s)};
}

Outcome mixture_latency() {
  const replay::LatencyModel lat{12.59, 3.75, 0.0};
  const double l = replay::expected_latency(0.52, lat);
  const double rel = std::abs(l - 7.63) / 7.63;
  return {std::abs(l - 7.99) < 0.005 && rel <= 0.06,
          fmt::format("expected_latency(0.52) = {:.4f} s, {:.2f}% from 7.63 s", l, rel * 100)};
}

Outcome schedule_conformance() {
  engine::ModelDims dims;
  dims.n_blocks = 2;
  const auto prompt = text::embed_text("a party on a beach", dims.d_emb);
  const auto full = engine::denoise(engine::DenoiseConfig::full(dims, 1), prompt);
  const auto fast = engine::denoise(engine::DenoiseConfig::fast(dims, 1), prompt, &*full.captured);
  const std::vector<std::pair<int, int>> want{{2, 0}, {3, 0}, {4, 0}};
  bool step_one = false;
  for (const auto& [k, b] : fast.cache_invocations) step_one |= k == 1;
  std::string got;
  for (const auto& [k, b] : fast.cache_invocations) got += fmt::format("({},{})", k, b);
  return {fast.cache_invocations == want && !step_one && fast.steps_executed == 8,
          fmt::format("invocations {} over {} steps", got, fast.steps_executed)};
}

Outcome self_reduction() {
  SplitMix64 rng(20240);
  float worst = 0.0f, worst_block = 0.0f;
  const auto prompt = text::embed_text("a lighthouse on a cliff", text::kDefaultEmbeddingDim);
  for (int i = 0; i < 100; ++i) {
    const std::size_t heads = std::size_t{1} << rng.below(3);
    const std::size_t d = heads * (4 + rng.below(6));
    const auto x = random_grid(rng, 1 + rng.below(4), 1 + rng.below(16), d);
    const auto copy = x;
    const auto p = model::AttentionParams::generate(d, heads, rng.next());
    worst = std::max(worst, model::max_abs_diff(model::multi_head_attention(x, copy, p).data(),
                                                model::self_attention(x, p).data()));
    const auto bp = model::BlockParams::generate(d, heads, prompt.dim(), rng.next());
    const auto m = model::modulate(x, prompt, bp).to_latent(2);
    worst_block = std::max(worst_block, model::max_abs_diff(model::stdit_block(x, prompt, &m, true, bp).data(),
                                                            model::stdit_block(x, prompt, nullptr, false, bp).data()));
  }
  return {worst <= 1e-7f && worst_block <= 1e-7f,
          fmt::format("max abs diff attention {:.3g}, block {:.3g} over 100 inputs", worst, worst_block)};
}

Outcome attention_oracle() {
  SplitMix64 rng(777);
  double worst = 0.0, worst_row = 0.0;
  int mismatched = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t heads = std::size_t{1} << rng.below(3);
    const std::size_t d = heads * (1 + rng.below(8));
    const auto q = random_grid(rng, 1 + rng.below(4), 1 + rng.below(8), d);
    const auto kv = random_grid(rng, 1 + rng.below(4), 1 + rng.below(8), d);
    mismatched += q.token_count() != kv.token_count();
    const auto p = model::AttentionParams::generate(d, heads, rng.next());
    model::AttentionProbabilities probs;
    const auto out = model::multi_head_attention(q, kv, p, &probs);
    const auto ref = oracle::naive_attention(q, kv, p);
    for (std::size_t i = 0; i < ref.output.size(); ++i) worst = std::max(worst, std::abs(out.data()[i] - ref.output[i]));
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < q.token_count(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < kv.token_count(); ++j) row += probs.at(h, i, j);
        worst_row = std::max(worst_row, std::abs(row - 1.0));
      }
    }
  }
  return {worst <= 1e-5 && worst_row <= 1e-5 && mismatched > 0,
          fmt::format("200 shapes ({} with q/kv count mismatch), max abs diff {:.3g}, max row-sum error {:.3g}",
                      mismatched, worst, worst_row)};
}

Outcome eviction_oracles() {
  std::string errors;
  for (auto policy : {cache::EvictionPolicy::fifo, cache::EvictionPolicy::lru, cache::EvictionPolicy::lfu}) {
    for (std::uint64_t seed : {1ull, 2ull}) {
      const auto err = oracle::run_eviction_trace(policy, 10000, seed);
      if (!err.empty()) errors += fmt::format("[{} seed {}: {}]", cache::to_string(policy), seed, err);
    }
  }
  return {errors.empty(), errors.empty() ? "fifo/lru/lfu x 2 seeds x 10^4 ops match the reference" : errors};
}

Outcome lookup_oracle() {
  const auto r = oracle::run_lookup_oracle(1000, 42);
  return {r.error.empty() && r.compared == 2000,
          r.error.empty() ? fmt::format("{} lookups over 1000 states: {} same entry and score, {} agree on no match, {} "
                                        "within 1e-6 of a tie or the threshold",
                                        r.compared, r.matches, r.compared - r.matches - r.near_ties, r.near_ties)
                          : r.error};
}

replay::ReplayOptions offline(std::uint64_t capacity, cache::EvictionPolicy policy, service::MatchingMode mode,
                              std::size_t warmup) {
  replay::ReplayOptions o;
  o.pipeline.cache.capacity_bytes = capacity;
  o.pipeline.cache.policy = policy;
  o.pipeline.cache.tau_entity = 0.8f;
  o.pipeline.cache.tau_prompt = 0.8f;
  o.pipeline.matching = mode;
  o.pipeline.exec_engine = false;
  o.warmup_n = warmup;
  return o;
}

Outcome entity_separation() {
  const auto t = replay::load_trace(std::string(CHAI_FIXTURE_DIR) + "/entity_vs_whole.jsonl");
  const auto e = replay::replay(t, offline(1ULL << 30, cache::EvictionPolicy::lru, service::MatchingMode::entity, 20));
  const auto w =
      replay::replay(t, offline(1ULL << 30, cache::EvictionPolicy::lru, service::MatchingMode::whole_prompt, 20));
  return {e.hit_rate == 1.0 && w.hit_rate < 0.2,
          fmt::format("{} post-warmup prompts: entity hit rate {:.3f}, whole-prompt {:.3f}", e.n_prompts, e.hit_rate,
                      w.hit_rate)};
}

Outcome monotone_scaling() {
  replay::SyntheticTraceOptions so;
  so.n_records = 100000;
  const auto trace = replay::synthetic_trace(so);
  const auto base = offline(0, cache::EvictionPolicy::lru, service::MatchingMode::entity, 100);

  // Working set: entries resident after an unbounded replay.
  auto unbounded = base;
  unbounded.pipeline.cache.capacity_bytes = 1ULL << 40;
  const auto ws = replay::replay(trace, unbounded).final_entries;

  replay::SweepOptions s;
  s.base = base;
  for (std::uint64_t n : {4, 8, 16, 32, 64, 128, 256, 512, 1024}) s.sizes.push_back(n * model_entry());
  s.policies = {cache::EvictionPolicy::fifo, cache::EvictionPolicy::lru, cache::EvictionPolicy::lfu};
  s.matching_modes = {service::MatchingMode::entity};
  const auto rows = replay::sweep(trace, s);
  const std::size_t n_sizes = s.sizes.size();

  std::string problems;
  for (std::size_t p = 0; p < s.policies.size(); ++p) {
    for (std::size_t i = 1; i < n_sizes; ++i) {
      const auto& a = rows[p * n_sizes + i - 1];
      const auto& b = rows[p * n_sizes + i];
      if (b.hit_rate < a.hit_rate) {
        problems += fmt::format("[{} drops {:.4f}->{:.4f} at {} B]", cache::to_string(b.policy), a.hit_rate,
                                b.hit_rate, b.capacity_bytes);
      }
    }
  }
  std::size_t coinciding = 0;
  for (std::size_t i = 0; i < n_sizes; ++i) {
    if (s.sizes[i] / model_entry() < ws) continue;
    ++coinciding;
    const auto& f = rows[i];
    for (std::size_t p = 1; p < s.policies.size(); ++p) {
      if (rows[p * n_sizes + i].hits != f.hits) problems += fmt::format("[policies differ at {} B]", s.sizes[i]);
    }
  }
  if (coinciding == 0) problems += "[no size exceeds the working set]";
  std::string curve;
  for (std::size_t p = 0; p < s.policies.size(); ++p) {
    curve += fmt::format(" {}:", cache::to_string(s.policies[p]));
    for (std::size_t i = 0; i < n_sizes; ++i) curve += fmt::format(" {:.3f}", rows[p * n_sizes + i].hit_rate);
  }
  return {problems.empty(),
          fmt::format("10^5 records, working set {} entries, sizes 4..1024 entries;{}{}", ws, curve, problems)};
}

Outcome end_to_end_determinism() {
  replay::SyntheticTraceOptions so;
  so.n_records = 47;
  so.seed = 11;
  const auto trace = replay::synthetic_trace(so);
  std::vector<std::string> script;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    script.push_back(nlohmann::json{{"op", "generate"}, {"request_id", trace[i].id}, {"prompt", trace[i].prompt}}.dump());
    if (i == 15) script.push_back(R"({"op":"stats"})");
    if (i == 30) script.push_back(R"({"op":"flush"})");
  }
  script.push_back(R"({"op":"stats"})");
  auto run = [&] {
    service::PipelineConfig cfg;
    cfg.cache.capacity_bytes = 12 * model_entry();
    service::CacheService svc(cfg);
    std::string out;
    for (const auto& line : script) out += svc.handle_line(line) + "\n";
    return out;
  };
  const std::string a = run();
  const std::string b = run();
  std::size_t digests = 0;
  for (std::size_t pos = 0; (pos = a.find("\"latent_digest\"", pos)) != std::string::npos; ++pos) ++digests;
  return {a == b && digests == trace.size(),
          fmt::format("{} requests, {} latent digests, {} response bytes, streams {}", script.size(), digests,
                      a.size(), a == b ? "identical" : "differ")};
}

Outcome flow_schedule() {
  const double s8 = engine::make_flow_schedule(8).step_size;
  const double s30 = engine::make_flow_schedule(30).step_size;
  return {s8 > s30, fmt::format("step_size(8) = {:.4f} > step_size(30) = {:.4f}", s8, s30)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"capacity math", capacity_math},
      {"speedup identity", speedup_identity},
      {"mixture latency", mixture_latency},
      {"schedule conformance", schedule_conformance},
      {"self-reduction", self_reduction},
      {"attention oracle", attention_oracle},
      {"eviction oracles", eviction_oracles},
      {"lookup oracle", lookup_oracle},
      {"entity vs whole-prompt separation", entity_separation},
      {"monotone scaling", monotone_scaling},
      {"end-to-end determinism", end_to_end_determinism},
      {"flow schedule", flow_schedule},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    fmt::print("{} {:2} {}: {} [{:.2f} s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail, secs);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
