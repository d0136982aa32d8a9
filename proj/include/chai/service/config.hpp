// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "chai/service/pipeline.hpp"

namespace chai::service {

inline constexpr const char* kConfigPathEnv = "CHAI_SERVICE_CONFIG";

/// "host:port" for TCP or "unix:/path" for a local stream socket.
struct ListenAddress {
  enum class Kind { tcp, unix_socket } kind = Kind::tcp;
  std::string host = "127.0.0.1";
  int port = 7070;
  std::string path;

  static ListenAddress parse(std::string_view text);
  std::string to_string() const;
};

struct ServiceConfig {
  PipelineConfig pipeline;
  ListenAddress listen;
};

/// Parses `key = value` lines; '#' starts a comment. Keys:
///   capacity_bytes, policy, tau_entity, tau_prompt, matching,
///   n_steps_full, n_steps_fast, t_full, t_fast, t_lookup,
///   listen, seed, exec_engine,
///   frames, tokens_per_frame, d_model, n_heads, n_blocks, d_emb.
/// Unknown keys and bad values throw ParseError with the line number.
/// The result is validated.
ServiceConfig parse_service_config(std::istream& in);
ServiceConfig load_service_config(const std::filesystem::path& path);

/// $CHAI_SERVICE_CONFIG when set and non-empty, else `fallback`.
std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& fallback);

}  // namespace chai::service
