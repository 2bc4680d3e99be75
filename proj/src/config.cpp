#include "cloudrank/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cloudrank/errors.hpp"

namespace cloudrank {

namespace {

std::string_view Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) {
    return {};
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string Unquote(std::string_view value, std::size_t line) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < value.size(); ++i) {
      if (value[i] == '\\' && i + 2 < value.size()) {
        ++i;
      }
      out += value[i];
    }
    return out;
  }
  if (!value.empty() && value.front() == '"') {
    throw ConfigError("line " + std::to_string(line) + ": unterminated string");
  }
  return std::string(value);
}

template <typename T>
T ToNumber(const std::string& value, const std::string& key) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
  return out;
}

void SetKey(Config& config, const std::string& key, const std::string& value) {
  if (key == "host") {
    config.host = value;
  } else if (key == "port") {
    config.port = ToNumber<int>(value, key);
    if (config.port < 0 || config.port > 65535) {
      throw ConfigError("port out of range");
    }
  } else if (key == "data_dir") {
    config.data_dir = value;
  } else if (key == "admin_token") {
    config.admin_token = value;
  } else if (key == "probe_interval") {
    config.probe_interval = ParseDuration(value);
  } else if (key == "workers") {
    config.workers = ToNumber<unsigned>(value, key);
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

}  // namespace

std::chrono::seconds ParseDuration(std::string_view text) {
  text = Trim(text);
  if (text.empty()) {
    throw ConfigError("empty duration");
  }
  long long multiplier = 1;
  switch (text.back()) {
    case 's': multiplier = 1; text.remove_suffix(1); break;
    case 'm': multiplier = 60; text.remove_suffix(1); break;
    case 'h': multiplier = 3600; text.remove_suffix(1); break;
    case 'd': multiplier = 86400; text.remove_suffix(1); break;
    default: break;
  }
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value <= 0) {
    throw ConfigError("invalid duration '" + std::string(text) + "'");
  }
  return std::chrono::seconds(value * multiplier);
}

Config ParseConfig(std::string_view text) {
  Config config;
  std::string section;
  std::vector<AgentSource> agents;  // declaration order
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      section = std::string(Trim(line.substr(1, line.size() - 2)));
      if (!section.empty() && section.rfind("agents.", 0) != 0) {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(Trim(line.substr(0, eq)));
    std::string_view value_text = Trim(line.substr(eq + 1));
    if (!value_text.empty() && value_text.front() != '"') {
      value_text = Trim(value_text.substr(0, value_text.find('#')));
    }
    const std::string value = Unquote(value_text, line_no);
    try {
      if (section.empty()) {
        SetKey(config, key, value);
      } else {
        const std::string name = section.substr(std::string("agents.").size());
        auto it = std::find_if(agents.begin(), agents.end(), [&](const AgentSource& a) { return a.name == name; });
        if (it == agents.end()) {
          it = agents.insert(agents.end(), AgentSource{name, "", ""});
        }
        AgentSource& agent = *it;
        if (key == "url") {
          agent.url = value;
        } else if (key == "token") {
          agent.token = value;
        } else {
          throw ConfigError("unknown agent key '" + key + "'");
        }
      }
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (AgentSource& agent : agents) {
    if (agent.url.empty()) {
      throw ConfigError("agent '" + agent.name + "' has no url");
    }
    config.agents.push_back(std::move(agent));
  }
  return config;
}

Config LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str());
}

void ApplyEnvironment(Config& config, const std::function<std::optional<std::string>(const char*)>& lookup) {
  static constexpr std::pair<const char*, const char*> kVariables[] = {
      {"CLOUDRANK_HOST", "host"},
      {"CLOUDRANK_PORT", "port"},
      {"CLOUDRANK_DATA_DIR", "data_dir"},
      {"CLOUDRANK_ADMIN_TOKEN", "admin_token"},
      {"CLOUDRANK_PROBE_INTERVAL", "probe_interval"},
      {"CLOUDRANK_WORKERS", "workers"},
  };
  for (const auto& [variable, key] : kVariables) {
    if (const auto value = lookup(variable)) {
      try {
        SetKey(config, key, *value);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(variable) + ": " + e.what());
      }
    }
  }
}

void ApplyEnvironment(Config& config) {
  ApplyEnvironment(config, [](const char* name) -> std::optional<std::string> {
    const char* value = std::getenv(name);
    return value == nullptr ? std::nullopt : std::optional<std::string>(value);
  });
}

}  // namespace cloudrank
