#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rowlight/artifacts.hpp"
#include "rowlight/conversation.hpp"

namespace rowlight::agent {

enum class ToolKind {
    HighlightRows,
    GetSchematic,
    CreateVoltageTest,
    CreateSignalTest,
    CreateInspectionTest,
    CreateConnectionSuggestion,
    CreateComponentSuggestion,
};

struct ToolSchema {
    ToolKind kind;
    std::string name;
    std::string description;
    nlohmann::json parameters;  // JSON Schema of the arguments object
    bool ask_mode = false;
    bool test_mode = false;

    bool available_in(Mode mode) const { return mode == Mode::Ask ? ask_mode : test_mode; }
    bool creates_test() const;
    bool creates_suggestion() const;
};

std::span<const ToolSchema> tool_registry();
const ToolSchema* find_tool(std::string_view name);
std::vector<ToolSchema> tools_for_mode(Mode mode);

// Bounds shared by the schemas and the argument parser.
inline constexpr int kMaxSignalSteps = 64;
inline constexpr int kMaxSignalRepeat = 20;
inline constexpr int kMaxSignalDurationMs = 60000;
inline constexpr int kMinIntervalMs = 1;
inline constexpr int kMaxIntervalMs = 1000;
inline constexpr std::size_t kMaxTextLength = 2000;

struct HighlightRowsArgs {
    std::vector<int> rows;
    protocol::LedPattern pattern = protocol::LedPattern::Blink;
};

struct GetSchematicArgs {};

struct VoltageTestArgs {
    std::string group;
    std::string title;
    PinId probe_pin;
    std::vector<int> probe_rows;
    std::optional<MillivoltRange> expected;
    std::string instruction;
};

struct SignalTestArgs {
    std::string group;
    std::string title;
    PinId drive_pin;
    std::vector<SequenceStep> steps;  // already expanded by `repeat`
    ProbeTarget observe;
    std::vector<int> probe_rows;
    std::optional<int> interval_ms;
};

struct InspectionTestArgs {
    std::string group;
    std::string title;
    std::string instruction;
    std::string prompt;
    std::vector<int> probe_rows;
};

struct ConnectionSuggestionArgs {
    int from_row = 1;
    int to_row = 1;
    std::string description;
};

struct ComponentSuggestionArgs {
    std::string component_kind;
    std::vector<int> rows;
    std::string description;
};

using ToolArgs = std::variant<HighlightRowsArgs, GetSchematicArgs, VoltageTestArgs, SignalTestArgs,
                              InspectionTestArgs, ConnectionSuggestionArgs, ComponentSuggestionArgs>;

// Validates `arguments` against the tool's bounds. Structural problems (wrong
// type, missing field, unknown pin) raise InvalidParams; numeric values outside
// their range raise ParamOutOfBounds. Row lists come back sorted and unique.
ToolArgs parse_tool_args(const ToolSchema& tool, const nlohmann::json& arguments);

}  // namespace rowlight::agent
