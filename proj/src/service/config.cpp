// SPDX-License-Identifier: Apache-2.0

#include "chai/service/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <stdexcept>

#include "chai/common/error.hpp"

namespace chai::service {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("invalid number '" + std::string(s) + "'");
  }
  return value;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("invalid boolean '" + std::string(s) + "'");
}

using Setter = std::function<void(ServiceConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"capacity_bytes", [](ServiceConfig& c, std::string_view v) { c.pipeline.cache.capacity_bytes = parse_number<std::uint64_t>(v); }},
      {"policy", [](ServiceConfig& c, std::string_view v) { c.pipeline.cache.policy = cache::parse_policy(v); }},
      {"tau_entity", [](ServiceConfig& c, std::string_view v) { c.pipeline.cache.tau_entity = parse_number<float>(v); }},
      {"tau_prompt", [](ServiceConfig& c, std::string_view v) { c.pipeline.cache.tau_prompt = parse_number<float>(v); }},
      {"matching", [](ServiceConfig& c, std::string_view v) { c.pipeline.matching = parse_matching(v); }},
      {"n_steps_full", [](ServiceConfig& c, std::string_view v) { c.pipeline.n_steps_full = parse_number<int>(v); }},
      {"n_steps_fast", [](ServiceConfig& c, std::string_view v) { c.pipeline.n_steps_fast = parse_number<int>(v); }},
      {"t_full", [](ServiceConfig& c, std::string_view v) { c.pipeline.latency.t_full = parse_number<double>(v); }},
      {"t_fast", [](ServiceConfig& c, std::string_view v) { c.pipeline.latency.t_fast = parse_number<double>(v); }},
      {"t_lookup", [](ServiceConfig& c, std::string_view v) { c.pipeline.latency.t_lookup = parse_number<double>(v); }},
      {"listen", [](ServiceConfig& c, std::string_view v) { c.listen = ListenAddress::parse(v); }},
      {"seed", [](ServiceConfig& c, std::string_view v) { c.pipeline.seed = parse_number<std::uint64_t>(v); }},
      {"exec_engine", [](ServiceConfig& c, std::string_view v) { c.pipeline.exec_engine = parse_bool(v); }},
      {"frames", [](ServiceConfig& c, std::string_view v) { c.pipeline.dims.frames = parse_number<std::size_t>(v); }},
      {"tokens_per_frame", [](ServiceConfig& c, std::string_view v) { c.pipeline.dims.tokens_per_frame = parse_number<std::size_t>(v); }},
      {"d_model", [](ServiceConfig& c, std::string_view v) { c.pipeline.dims.d_model = parse_number<std::size_t>(v); }},
      {"n_heads", [](ServiceConfig& c, std::string_view v) { c.pipeline.dims.n_heads = parse_number<std::size_t>(v); }},
      {"n_blocks", [](ServiceConfig& c, std::string_view v) { c.pipeline.dims.n_blocks = parse_number<std::size_t>(v); }},
      {"d_emb", [](ServiceConfig& c, std::string_view v) { c.pipeline.dims.d_emb = parse_number<std::size_t>(v); }},
  };
  return table;
}

}  // namespace

ListenAddress ListenAddress::parse(std::string_view text) {
  ListenAddress addr;
  if (text.starts_with("unix:")) {
    addr.kind = Kind::unix_socket;
    addr.path = std::string(text.substr(5));
    if (addr.path.empty()) throw std::invalid_argument("empty unix socket path");
    return addr;
  }
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("listen address must be host:port or unix:/path");
  addr.host = std::string(text.substr(0, colon));
  if (addr.host.empty()) throw std::invalid_argument("empty listen host");
  addr.port = parse_number<int>(text.substr(colon + 1));
  if (addr.port < 0 || addr.port > 65535) throw std::invalid_argument("port out of range");
  return addr;
}

std::string ListenAddress::to_string() const {
  return kind == Kind::unix_socket ? "unix:" + path : host + ":" + std::to_string(port);
}

ServiceConfig parse_service_config(std::istream& in) {
  ServiceConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    const std::string_view key = trim(view.substr(0, eq));
    const std::string_view value = trim(view.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw ParseError("unknown key '" + std::string(key) + "'", line_no);
    try {
      it->second(config, value);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string(key) + ": " + e.what(), line_no);
    }
  }
  config.pipeline.validate();
  return config;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  return parse_service_config(in);
}

std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& fallback) {
  if (const char* env = std::getenv(kConfigPathEnv); env && *env) return std::filesystem::path(env);
  return fallback;
}

}  // namespace chai::service
