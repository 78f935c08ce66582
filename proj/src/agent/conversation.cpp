#include "rowlight/conversation.hpp"

#include <array>
#include <utility>

namespace rowlight::agent {

namespace {

constexpr std::array<std::pair<Mode, std::string_view>, 2> kModes{{
    {Mode::Ask, "ask"},
    {Mode::Test, "test"},
}};

constexpr std::array<std::pair<Role, std::string_view>, 5> kRoles{{
    {Role::System, "system"},
    {Role::Developer, "developer"},
    {Role::User, "user"},
    {Role::Assistant, "assistant"},
    {Role::Tool, "tool"},
}};

constexpr std::array<std::pair<StatusEvent::Kind, std::string_view>, 4> kStatus{{
    {StatusEvent::Kind::Thinking, "Thinking"},
    {StatusEvent::Kind::AddingTests, "AddingTests"},
    {StatusEvent::Kind::Responded, "Responded"},
    {StatusEvent::Kind::Failed, "Failed"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
    for (const auto& [v, name] : table) {
        if (v == value) {
            return name;
        }
    }
    return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table,
                          std::string_view s) {
    for (const auto& [v, name] : table) {
        if (name == s) {
            return v;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(Mode mode) { return name_of(kModes, mode); }
std::optional<Mode> mode_from_string(std::string_view s) { return value_of(kModes, s); }
std::string_view to_string(Role role) { return name_of(kRoles, role); }
std::optional<Role> role_from_string(std::string_view s) { return value_of(kRoles, s); }
std::string_view to_string(StatusEvent::Kind kind) { return name_of(kStatus, kind); }
std::optional<StatusEvent::Kind> status_kind_from_string(std::string_view s) {
    return value_of(kStatus, s);
}

void to_json(nlohmann::json& j, const Turn& turn) {
    j = {{"role", to_string(turn.role)}, {"text", turn.text}, {"at", turn.at}};
    if (!turn.payload.is_null()) {
        j["payload"] = turn.payload;
    }
}

void from_json(const nlohmann::json& j, Turn& turn) {
    auto role = role_from_string(j.at("role").get<std::string>());
    if (!role) {
        throw nlohmann::json::other_error::create(
            501, "unknown role " + j.at("role").get<std::string>(), &j);
    }
    turn.role = *role;
    turn.text = j.at("text").get<std::string>();
    turn.at = j.value("at", std::int64_t{0});
    turn.payload = j.contains("payload") ? j.at("payload") : nlohmann::json();
}

void to_json(nlohmann::json& j, const ToolCall& call) {
    j = {{"id", call.id}, {"name", call.name}, {"arguments", call.arguments}};
}

void from_json(const nlohmann::json& j, ToolCall& call) {
    call.id = j.value("id", "");
    call.name = j.at("name").get<std::string>();
    call.arguments = j.value("arguments", nlohmann::json::object());
}

void to_json(nlohmann::json& j, const StatusEvent& event) {
    j = {{"status", to_string(event.kind)}};
    if (event.kind == StatusEvent::Kind::Failed) {
        j["reason"] = event.reason;
    }
}

void from_json(const nlohmann::json& j, StatusEvent& event) {
    auto kind = status_kind_from_string(j.at("status").get<std::string>());
    if (!kind) {
        throw nlohmann::json::other_error::create(501, "unknown status", &j);
    }
    event.kind = *kind;
    event.reason = j.value("reason", "");
}

}  // namespace rowlight::agent
