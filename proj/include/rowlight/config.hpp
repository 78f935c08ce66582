#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "rowlight/agent_client.hpp"

namespace rowlight::service {

struct SimBackend {
    std::filesystem::path fixture;
};

struct SerialBackend {
    std::string endpoint;  // serial device path or host:port
    int baud = 115200;
    int response_timeout_ms = 1000;
};

struct TapeBackend {
    std::filesystem::path tape;
};

struct RemoteBackend {
    agent::RemoteAgentConfig remote;
};

//   device: {sim: fixtures/equal-divider.yaml}
//           | {serial: {endpoint: /dev/ttyACM0, baud: 115200}}
//   agent:  {tape: fixtures/tapes/end-to-end.yaml}
//           | {remote: {endpoint: https://..., model: ..., api_key_env: ...}}
//   http:   {bind: 127.0.0.1, port: 8080}
//   log_dir: logs
//   sample_interval_ms: 10
//   max_tool_rounds: 4
//
// Relative paths resolve against the directory holding the config file.
struct Config {
    std::variant<SimBackend, SerialBackend> device;
    std::variant<TapeBackend, RemoteBackend> agent;
    std::string bind = "127.0.0.1";
    int port = 8080;
    std::filesystem::path log_dir = "logs";
    int sample_interval_ms = 10;
    int max_tool_rounds = 4;
};

Config parse_config_yaml(std::string_view yaml, const std::filesystem::path& base_dir);  // ConfigInvalid
Config load_config(const std::filesystem::path& path);

}  // namespace rowlight::service
