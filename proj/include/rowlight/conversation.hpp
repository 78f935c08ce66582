#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rowlight::agent {

enum class Mode { Ask, Test };

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view s);

enum class Role { System, Developer, User, Assistant, Tool };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view s);

/// One entry of the conversation. `text` is what a model reads; `payload`
/// carries structured data (tool calls, tool results, context entries) and is
/// null for plain text turns.
struct Turn {
    Role role = Role::User;
    std::string text;
    nlohmann::json payload;
    std::int64_t at = 0;  // ms since epoch

    bool operator==(const Turn&) const = default;
};

struct ToolCall {
    std::string id;
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();

    bool operator==(const ToolCall&) const = default;
};

struct StatusEvent {
    enum class Kind { Thinking, AddingTests, Responded, Failed };

    Kind kind = Kind::Thinking;
    std::string reason;  // Failed only

    bool terminal() const { return kind == Kind::Responded || kind == Kind::Failed; }
    bool operator==(const StatusEvent&) const = default;
};

std::string_view to_string(StatusEvent::Kind kind);
std::optional<StatusEvent::Kind> status_kind_from_string(std::string_view s);

void to_json(nlohmann::json& j, const Turn& turn);
void from_json(const nlohmann::json& j, Turn& turn);
void to_json(nlohmann::json& j, const ToolCall& call);
void from_json(const nlohmann::json& j, ToolCall& call);
void to_json(nlohmann::json& j, const StatusEvent& event);
void from_json(const nlohmann::json& j, StatusEvent& event);

}  // namespace rowlight::agent
