#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rowlight/conversation.hpp"
#include "rowlight/error.hpp"
#include "rowlight/tools.hpp"

namespace rowlight::agent {

// Versioned instruction text injected as the first turn of every session.
std::string_view system_instructions();
std::string_view system_instructions_version();

struct AgentRequest {
    std::span<const Turn> turns;
    std::span<const ToolSchema> tools;  // already filtered by mode
    Mode mode = Mode::Ask;
    std::size_t query_index = 0;  // queries completed before this one
    int round = 0;                // tool rounds already taken in this query
};

struct AgentReply {
    std::string text;
    std::vector<ToolCall> calls;
};

/// One model turn: given the conversation and the available tools, produce
/// text and/or tool calls. Failures throw AgentUnavailable.
class AgentClient {
public:
    virtual ~AgentClient() = default;
    virtual AgentReply respond(const AgentRequest& request) = 0;
};

// ---- scripted tape -------------------------------------------------------
//
//   replies:
//     0:
//       text: "..."
//       calls:
//         - name: create_voltage_test
//           args: {group: Divider, probe_pin: A0, probe_rows: [12]}
//     1: {text: "..."}
//
// Keys are query ordinals. A reply is played on the first round of its query;
// later rounds get an empty reply, which ends the tool loop.

struct TapeCall {
    std::string name;
    nlohmann::json args = nlohmann::json::object();
};

struct TapeEntry {
    std::string text;
    std::vector<TapeCall> calls;
};

struct Tape {
    std::map<std::size_t, TapeEntry> replies;
};

Tape parse_tape_yaml(std::string_view yaml);  // throws YamlInvalid
Tape load_tape_file(const std::filesystem::path& path);

struct TapeProblem {
    std::size_t reply = 0;
    std::size_t call = 0;
    std::string tool;
    ErrorCode code = ErrorCode::UnknownTool;
    std::string message;
};

// Checks every call against the tool registry and argument bounds.
std::vector<TapeProblem> check_tape(const Tape& tape);

class ScriptedAgent final : public AgentClient {
public:
    explicit ScriptedAgent(Tape tape);

    AgentReply respond(const AgentRequest& request) override;

    // Conversations seen so far, one copy per respond() call.
    std::vector<std::vector<Turn>> seen_turns() const;
    std::vector<std::vector<std::string>> seen_tool_names() const;

private:
    Tape tape_;
    mutable std::mutex mutex_;
    std::vector<std::vector<Turn>> seen_;
    std::vector<std::vector<std::string>> seen_tools_;
};

// ---- remote chat-completions client -------------------------------------

struct RemoteAgentConfig {
    std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
    std::string model;
    std::string api_key_env = "ROWLIGHT_API_KEY";
    int timeout_s = 60;
};

nlohmann::json build_chat_request(const AgentRequest& request, const std::string& model);
AgentReply parse_chat_response(const nlohmann::json& body);  // throws AgentUnavailable

class RemoteAgent final : public AgentClient {
public:
    explicit RemoteAgent(RemoteAgentConfig config);
    AgentReply respond(const AgentRequest& request) override;

private:
    RemoteAgentConfig config_;
};

}  // namespace rowlight::agent
