#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cloudrank {

struct AgentSource {
  std::string name;
  std::string url;
  std::string token;
};

// Operator configuration. Loaded from a TOML-style key/value file; CLOUDRANK_* environment variables win.
struct Config {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "data";
  std::string admin_token;
  std::chrono::seconds probe_interval{2 * 60 * 60};
  unsigned workers = 1;
  std::vector<AgentSource> agents;
};

/*
 * Accepted syntax: `key = value` lines, `#` comments, `[section]` headers, values as bare words, integers or
 * double-quoted strings. Top-level keys: host, port, data_dir, admin_token, probe_interval, workers.
 * Agents: `[agents.<name>]` sections with `url` and `token`.
 * Throws ConfigError with the line number on anything else.
 */
Config ParseConfig(std::string_view text);
Config LoadConfig(const std::string& path);

// Applies CLOUDRANK_HOST, CLOUDRANK_PORT, CLOUDRANK_DATA_DIR, CLOUDRANK_ADMIN_TOKEN, CLOUDRANK_PROBE_INTERVAL,
// CLOUDRANK_WORKERS. `lookup` returns the variable value or nullopt.
void ApplyEnvironment(Config& config, const std::function<std::optional<std::string>(const char*)>& lookup);
void ApplyEnvironment(Config& config);

// "90s", "15m", "2h", "1d" or a bare number of seconds. Throws ConfigError.
std::chrono::seconds ParseDuration(std::string_view text);

}  // namespace cloudrank
