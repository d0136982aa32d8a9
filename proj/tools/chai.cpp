// SPDX-License-Identifier: Apache-2.0
//
// chai: trace replay, budget sweeps, synthetic traces and the cache service.

#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "chai/cache/cache_config.hpp"
#include "chai/cache/cache_entry.hpp"
#include "chai/engine/denoiser.hpp"
#include "chai/engine/flow_schedule.hpp"
#include "chai/replay/replay.hpp"
#include "chai/replay/trace.hpp"
#include "chai/service/config.hpp"
#include "chai/service/server.hpp"
#include "chai/text/embedding.hpp"

namespace {

using namespace chai;

// Accepts plain bytes or a K/M/G (decimal) or KiB/MiB/GiB suffix, e.g. "1GiB", "1.3MiB".
std::uint64_t parse_bytes(const std::string& text) {
  std::size_t pos = 0;
  const double value = std::stod(text, &pos);
  const std::string unit = text.substr(pos);
  double scale = 1.0;
  if (unit.empty() || unit == "B") scale = 1.0;
  else if (unit == "K" || unit == "KB") scale = 1e3;
  else if (unit == "M" || unit == "MB") scale = 1e6;
  else if (unit == "G" || unit == "GB") scale = 1e9;
  else if (unit == "KiB") scale = 1024.0;
  else if (unit == "MiB") scale = 1024.0 * 1024.0;
  else if (unit == "GiB") scale = 1024.0 * 1024.0 * 1024.0;
  else throw std::invalid_argument("unknown size unit '" + unit + "'");
  if (!(value >= 0.0)) throw std::invalid_argument("size must be non-negative: " + text);
  return static_cast<std::uint64_t>(value * scale);
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    if (end > start) out.push_back(text.substr(start, end - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct ReplayArgs {
  std::string trace;
  std::size_t synthetic = 0;
  std::string capacity = "1GiB";
  std::string policy = "lru";
  std::string matching = "entity";
  std::size_t warmup = 100;
  float tau = 0.8f;
  double t_full = 12.59;
  double t_fast = 3.75;
  double t_lookup = 0.0;
  bool exec_engine = false;
  std::uint64_t seed = 0;
};

void add_replay_options(CLI::App* cmd, ReplayArgs& a) {
  auto* trace = cmd->add_option("--trace", a.trace, "JSONL trace (id, timestamp, prompt)");
  auto* syn = cmd->add_option("--synthetic", a.synthetic, "Use an N-record synthetic trace instead");
  trace->excludes(syn);
  cmd->add_option("--warmup", a.warmup, "Prompts that populate the cache first")->capture_default_str();
  cmd->add_option("--tau", a.tau, "Similarity threshold")->capture_default_str();
  cmd->add_option("--latency-full", a.t_full, "Seconds per full run")->capture_default_str();
  cmd->add_option("--latency-fast", a.t_fast, "Seconds per fast run")->capture_default_str();
  cmd->add_option("--latency-lookup", a.t_lookup, "Seconds per cache probe")->capture_default_str();
  cmd->add_flag("--exec-engine", a.exec_engine, "Run the denoiser instead of size-accurate placeholders");
  cmd->add_option("--seed", a.seed, "Engine seed")->capture_default_str();
}

std::vector<replay::TraceRecord> load_input(const ReplayArgs& a) {
  if (a.synthetic > 0) {
    replay::SyntheticTraceOptions opts;
    opts.n_records = a.synthetic;
    return replay::synthetic_trace(opts);
  }
  if (a.trace.empty()) throw std::invalid_argument("one of --trace or --synthetic is required");
  return replay::load_trace(a.trace);
}

replay::ReplayOptions replay_options(const ReplayArgs& a) {
  replay::ReplayOptions opts;
  opts.warmup_n = a.warmup;
  auto& p = opts.pipeline;
  p.cache.capacity_bytes = parse_bytes(a.capacity);
  p.cache.policy = cache::parse_policy(a.policy);
  p.cache.tau_entity = a.tau;
  p.cache.tau_prompt = a.tau;
  p.matching = service::parse_matching(a.matching);
  p.latency = replay::LatencyModel{a.t_full, a.t_fast, a.t_lookup};
  p.exec_engine = a.exec_engine;
  p.seed = a.seed;
  return opts;
}

void print_report(const replay::ReplayReport& r) {
  fmt::print("capacity_bytes: {}\n", r.capacity_bytes);
  fmt::print("policy: {}\n", cache::to_string(r.policy));
  fmt::print("matching: {}\n", service::to_string(r.matching));
  fmt::print("warmup: {}\n", r.warmup_n);
  fmt::print("prompts: {}\n", r.n_prompts);
  fmt::print("hits: {}\n", r.hits);
  fmt::print("misses: {}\n", r.misses);
  fmt::print("hit_rate: {:.6f}\n", r.hit_rate);
  fmt::print("mean_latency_s: {:.6f}\n", r.mean_modeled_latency_s);
  fmt::print("evictions: {}\n", r.evictions);
  fmt::print("cache_writes: {}\n", r.writes);
  fmt::print("final_entries: {}\n", r.final_entries);
}

service::LineServer* g_server = nullptr;

extern "C" void on_signal(int) {
  // shutdown() is async-signal-safe; stop() runs after serve() returns.
  if (g_server) g_server->stop_accepting();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity-level semantic latent cache for video diffusion"};
  app.require_subcommand(1);

  ReplayArgs rargs;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a prompt trace and report hit rate and modeled latency");
  add_replay_options(replay_cmd, rargs);
  replay_cmd->add_option("--capacity", rargs.capacity, "Cache budget (bytes, or with K/M/G/KiB/MiB/GiB)")
      ->capture_default_str();
  replay_cmd->add_option("--policy", rargs.policy, "fifo | lru | lfu")->capture_default_str();
  replay_cmd->add_option("--matching", rargs.matching, "entity | whole")->capture_default_str();

  ReplayArgs sargs;
  std::string sizes = "64MiB,256MiB,1GiB";
  std::string policies = "fifo,lru,lfu";
  std::string modes = "entity";
  std::string out_path;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep cache budgets, policies and matching modes into CSV");
  add_replay_options(sweep_cmd, sargs);
  sweep_cmd->add_option("--sizes", sizes, "Comma-separated budgets")->capture_default_str();
  sweep_cmd->add_option("--policies", policies, "Comma-separated policies")->capture_default_str();
  sweep_cmd->add_option("--matching", modes, "Comma-separated matching modes")->capture_default_str();
  sweep_cmd->add_option("--out", out_path, "CSV path (stdout when omitted)");

  replay::SyntheticTraceOptions gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-trace", "Write a deterministic synthetic trace");
  gen_cmd->add_option("--records", gen.n_records, "Number of prompts")->capture_default_str();
  gen_cmd->add_option("--vocabulary", gen.vocabulary, "Distinct object words")->capture_default_str();
  gen_cmd->add_option("--zipf", gen.zipf_s, "Zipf exponent of object popularity")->capture_default_str();
  gen_cmd->add_option("--max-objects", gen.max_objects, "Objects per prompt, at most")->capture_default_str();
  gen_cmd->add_option("--scene-probability", gen.scene_probability, "Chance a prompt names a scene")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output path")->required();

  std::string config_path;
  std::string listen;
  auto* serve_cmd = app.add_subcommand("serve", "Serve newline-delimited JSON requests over a socket");
  serve_cmd->add_option("--config", config_path, "key = value config file (overridden by $CHAI_SERVICE_CONFIG)");
  serve_cmd->add_option("--listen", listen, "host:port or unix:/path");

  std::string mode = "full";
  int steps = 0;
  std::uint64_t engine_seed = 0;
  std::string prompt = "a party on a beach";
  std::string deltas_out;
  auto* deltas_cmd = app.add_subcommand("trace-deltas", "Per-step feature distances of one run as CSV");
  deltas_cmd->add_option("--mode", mode, "full | fast (fast runs without a cache)")->capture_default_str();
  deltas_cmd->add_option("--steps", steps, "Step count (mode default when omitted)");
  deltas_cmd->add_option("--seed", engine_seed, "Engine seed")->capture_default_str();
  deltas_cmd->add_option("--prompt", prompt, "Conditioning prompt")->capture_default_str();
  deltas_cmd->add_option("--out", deltas_out, "CSV path (stdout when omitted)");

  std::string budget = "1GiB";
  std::string entry = "1.3MiB";
  auto* cap_cmd = app.add_subcommand("capacity", "Number of entries that fit a budget");
  cap_cmd->add_option("--budget", budget, "Cache budget")->capture_default_str();
  cap_cmd->add_option("--entry", entry, "Per-entry size, or 'model' for the engine's entry size")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*replay_cmd) {
      const auto trace = load_input(rargs);
      print_report(replay::replay(trace, replay_options(rargs)));
    } else if (*sweep_cmd) {
      const auto trace = load_input(sargs);
      replay::SweepOptions opts;
      opts.base = replay_options(sargs);
      for (const auto& s : split_csv(sizes)) opts.sizes.push_back(parse_bytes(s));
      for (const auto& p : split_csv(policies)) opts.policies.push_back(cache::parse_policy(p));
      for (const auto& m : split_csv(modes)) opts.matching_modes.push_back(service::parse_matching(m));
      const auto rows = replay::sweep(trace, opts);
      if (out_path.empty()) {
        replay::write_sweep_csv(std::cout, rows);
      } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
        replay::write_sweep_csv(out, rows);
      }
    } else if (*gen_cmd) {
      replay::save_trace(gen_out, replay::synthetic_trace(gen));
    } else if (*serve_cmd) {
      service::ServiceConfig cfg;
      const auto path = service::resolve_config_path(
          config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path));
      if (path) cfg = service::load_service_config(*path);
      if (!listen.empty()) cfg.listen = service::ListenAddress::parse(listen);
      cfg.pipeline.validate();
      service::CacheService svc(cfg.pipeline);
      service::LineServer server(svc, cfg.listen);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      fmt::print(stderr, "listening on {}\n", server.address().to_string());
      server.serve();
      server.stop();
      g_server = nullptr;
    } else if (*deltas_cmd) {
      engine::DenoiseConfig cfg;
      if (mode == "full") {
        cfg = engine::DenoiseConfig::full({}, engine_seed);
      } else if (mode == "fast") {
        cfg = engine::DenoiseConfig::fast({}, engine_seed);
        cfg.schedule = model::Schedule::disabled();
      } else {
        throw std::invalid_argument("mode must be full or fast");
      }
      if (steps > 0) cfg.n_steps = steps;
      const auto run = engine::denoise(cfg, text::embed_text(prompt, cfg.dims.d_emb));
      if (deltas_out.empty()) {
        engine::write_step_deltas_csv(std::cout, run);
      } else {
        std::ofstream out(deltas_out);
        if (!out) throw std::runtime_error("cannot write '" + deltas_out + "'");
        engine::write_step_deltas_csv(out, run);
      }
    } else if (*cap_cmd) {
      const std::uint64_t entry_bytes = entry == "model"
                                            ? cache::entry_size_bytes(engine::ModelDims{}.latent_shape())
                                            : parse_bytes(entry);
      fmt::print("{}\n", cache::capacity_entries(parse_bytes(budget), entry_bytes));
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "chai: error: {}\n", e.what());
    return 1;
  }
  return 0;
}
