#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include "rowlight/config.hpp"
#include "rowlight/error.hpp"

namespace rowlight::service {

namespace {

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::ConfigInvalid, what); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string required_str(const YAML::Node& node, const char* key, const char* where) {
    const YAML::Node v = node[key];
    if (!v || !v.IsScalar() || v.Scalar().empty()) {
        invalid(std::string(where) + " needs '" + key + "'");
    }
    return v.Scalar();
}

// Exactly one of the listed keys, returned with its value.
std::pair<std::string, YAML::Node> one_of(const YAML::Node& node, const char* section,
                                          std::initializer_list<const char*> keys) {
    if (!node || !node.IsMap()) {
        invalid(std::string("'") + section + "' must be a mapping");
    }
    std::optional<std::pair<std::string, YAML::Node>> found;
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
            invalid(std::string("unknown ") + section + " backend '" + key + "'");
        }
        if (found) {
            invalid(std::string("'") + section + "' selects more than one backend");
        }
        found.emplace(key, kv.second);
    }
    if (!found) {
        invalid(std::string("'") + section + "' selects no backend");
    }
    return *found;
}

}  // namespace

Config parse_config_yaml(std::string_view yaml, const std::filesystem::path& base_dir) {
    Config cfg;
    try {
        const YAML::Node root = YAML::Load(std::string(yaml));
        if (!root.IsMap()) {
            invalid("config must be a mapping");
        }
        for (const auto& kv : root) {
            const auto key = kv.first.as<std::string>();
            if (key != "device" && key != "agent" && key != "http" && key != "log_dir" &&
                key != "sample_interval_ms" && key != "max_tool_rounds") {
                invalid("unknown config key '" + key + "'");
            }
        }

        auto [device_kind, device] = one_of(root["device"], "device", {"sim", "serial"});
        if (device_kind == "sim") {
            if (!device.IsScalar()) {
                invalid("device.sim must be a fixture path");
            }
            cfg.device = SimBackend{resolve(base_dir, device.Scalar())};
        } else {
            SerialBackend serial;
            if (device.IsScalar()) {
                serial.endpoint = device.Scalar();
            } else {
                serial.endpoint = required_str(device, "endpoint", "device.serial");
                serial.baud = device["baud"] ? device["baud"].as<int>() : serial.baud;
                serial.response_timeout_ms = device["response_timeout_ms"]
                                                 ? device["response_timeout_ms"].as<int>()
                                                 : serial.response_timeout_ms;
            }
            cfg.device = serial;
        }

        auto [agent_kind, agent] = one_of(root["agent"], "agent", {"tape", "remote"});
        if (agent_kind == "tape") {
            if (!agent.IsScalar()) {
                invalid("agent.tape must be a tape path");
            }
            cfg.agent = TapeBackend{resolve(base_dir, agent.Scalar())};
        } else {
            RemoteBackend remote;
            remote.remote.endpoint = required_str(agent, "endpoint", "agent.remote");
            remote.remote.model = required_str(agent, "model", "agent.remote");
            if (agent["api_key_env"]) {
                remote.remote.api_key_env = agent["api_key_env"].as<std::string>();
            }
            if (agent["timeout_s"]) {
                remote.remote.timeout_s = agent["timeout_s"].as<int>();
            }
            cfg.agent = remote;
        }

        if (const YAML::Node http = root["http"]) {
            if (http["bind"]) {
                cfg.bind = http["bind"].as<std::string>();
            }
            if (http["port"]) {
                cfg.port = http["port"].as<int>();
            }
        }
        if (cfg.port < 0 || cfg.port > 65535) {
            invalid("http.port outside 0..65535");
        }
        if (root["log_dir"]) {
            cfg.log_dir = resolve(base_dir, root["log_dir"].as<std::string>());
        } else {
            cfg.log_dir = base_dir / cfg.log_dir;
        }
        if (root["sample_interval_ms"]) {
            cfg.sample_interval_ms = root["sample_interval_ms"].as<int>();
            if (cfg.sample_interval_ms < 1 || cfg.sample_interval_ms > 1000) {
                invalid("sample_interval_ms outside 1..1000");
            }
        }
        if (root["max_tool_rounds"]) {
            cfg.max_tool_rounds = root["max_tool_rounds"].as<int>();
            if (cfg.max_tool_rounds < 1) {
                invalid("max_tool_rounds must be at least 1");
            }
        }
    } catch (const YAML::Exception& e) {
        invalid(e.what());
    }
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        invalid("cannot open config " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_yaml(buf.str(), path.parent_path());
}

}  // namespace rowlight::service
