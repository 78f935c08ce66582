#include <yaml-cpp/yaml.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "rowlight/agent_client.hpp"
#include "rowlight/error.hpp"

namespace rowlight::agent {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::YamlInvalid, "tape: " + what); }

// Plain scalars are typed the YAML 1.2 core way; quoted ones stay strings.
json scalar_to_json(const YAML::Node& node) {
    const std::string& s = node.Scalar();
    if (node.Tag() == "!") {
        return s;
    }
    static const std::regex integer(R"([-+]?[0-9]+)");
    static const std::regex real(R"([-+]?([0-9]+\.[0-9]*|\.[0-9]+)([eE][-+]?[0-9]+)?)");
    if (std::regex_match(s, integer)) {
        try {
            return std::stoll(s);
        } catch (const std::out_of_range&) {
            return s;
        }
    }
    if (std::regex_match(s, real)) {
        return std::stod(s);
    }
    if (s == "true" || s == "True" || s == "TRUE") {
        return true;
    }
    if (s == "false" || s == "False" || s == "FALSE") {
        return false;
    }
    if (s == "null" || s == "~" || s.empty()) {
        return nullptr;
    }
    return s;
}

json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Scalar:
            return scalar_to_json(node);
        case YAML::NodeType::Sequence: {
            json out = json::array();
            for (const auto& item : node) {
                out.push_back(yaml_to_json(item));
            }
            return out;
        }
        case YAML::NodeType::Map: {
            json out = json::object();
            for (const auto& kv : node) {
                out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            }
            return out;
        }
    }
    return nullptr;
}

TapeEntry read_entry(const YAML::Node& node) {
    TapeEntry entry;
    if (node.IsNull()) {
        return entry;
    }
    if (!node.IsMap()) {
        invalid("each reply must be a mapping");
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (key != "text" && key != "calls") {
            invalid("unknown reply key '" + key + "'");
        }
    }
    if (node["text"]) {
        entry.text = node["text"].as<std::string>();
    }
    if (const auto calls = node["calls"]) {
        if (!calls.IsSequence()) {
            invalid("'calls' must be a sequence");
        }
        for (const auto& c : calls) {
            if (!c.IsMap() || !c["name"]) {
                invalid("each call needs a name");
            }
            TapeCall call{c["name"].as<std::string>(), json::object()};
            if (c["args"]) {
                call.args = yaml_to_json(c["args"]);
            }
            entry.calls.push_back(std::move(call));
        }
    }
    return entry;
}

}  // namespace

Tape parse_tape_yaml(std::string_view yaml) {
    Tape tape;
    try {
        const YAML::Node root = YAML::Load(std::string(yaml));
        if (!root.IsMap() || !root["replies"]) {
            invalid("top level must be a mapping with 'replies'");
        }
        const YAML::Node replies = root["replies"];
        if (replies.IsSequence()) {
            std::size_t i = 0;
            for (const auto& r : replies) {
                tape.replies[i++] = read_entry(r);
            }
        } else if (replies.IsMap()) {
            for (const auto& kv : replies) {
                const auto key = kv.first.as<long long>();
                if (key < 0) {
                    invalid("reply index must be non-negative");
                }
                if (!tape.replies.emplace(static_cast<std::size_t>(key), read_entry(kv.second)).second) {
                    invalid("reply " + std::to_string(key) + " given twice");
                }
            }
        } else if (!replies.IsNull()) {
            invalid("'replies' must be a mapping or a sequence");
        }
    } catch (const YAML::Exception& e) {
        invalid(e.what());
    }
    return tape;
}

Tape load_tape_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open tape " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_tape_yaml(buf.str());
}

std::vector<TapeProblem> check_tape(const Tape& tape) {
    std::vector<TapeProblem> problems;
    for (const auto& [index, entry] : tape.replies) {
        for (std::size_t i = 0; i < entry.calls.size(); ++i) {
            const auto& call = entry.calls[i];
            const ToolSchema* tool = find_tool(call.name);
            if (!tool) {
                problems.push_back({index, i, call.name, ErrorCode::UnknownTool,
                                    "no tool named '" + call.name + "'"});
                continue;
            }
            try {
                parse_tool_args(*tool, call.args);
            } catch (const Error& e) {
                problems.push_back({index, i, call.name, e.code(), e.what()});
            }
        }
    }
    return problems;
}

ScriptedAgent::ScriptedAgent(Tape tape) : tape_(std::move(tape)) {}

AgentReply ScriptedAgent::respond(const AgentRequest& request) {
    {
        std::lock_guard g(mutex_);
        seen_.emplace_back(request.turns.begin(), request.turns.end());
        std::vector<std::string> names;
        for (const auto& t : request.tools) {
            names.push_back(t.name);
        }
        seen_tools_.push_back(std::move(names));
    }
    if (request.round > 0) {
        return {};
    }
    auto it = tape_.replies.find(request.query_index);
    if (it == tape_.replies.end()) {
        fail(ErrorCode::AgentUnavailable,
             "tape has no reply for query " + std::to_string(request.query_index));
    }
    AgentReply reply{it->second.text, {}};
    for (std::size_t i = 0; i < it->second.calls.size(); ++i) {
        const auto& c = it->second.calls[i];
        reply.calls.push_back({"call-" + std::to_string(request.query_index) + "-" + std::to_string(i + 1),
                               c.name, c.args});
    }
    return reply;
}

std::vector<std::vector<Turn>> ScriptedAgent::seen_turns() const {
    std::lock_guard g(mutex_);
    return seen_;
}

std::vector<std::vector<std::string>> ScriptedAgent::seen_tool_names() const {
    std::lock_guard g(mutex_);
    return seen_tools_;
}

}  // namespace rowlight::agent
