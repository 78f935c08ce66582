#include "rowlight/tools.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

#include "rowlight/error.hpp"

namespace rowlight::agent {

using nlohmann::json;

namespace {

json pin_enum(std::span<const PinId> pins) {
    json names = json::array();
    for (const auto& p : pins) {
        names.push_back(p.name());
    }
    return {{"type", "string"}, {"enum", names}};
}

json row_list(int min_items) {
    return {{"type", "array"},
            {"items", {{"type", "integer"}, {"minimum", protocol::kMinRow}, {"maximum", protocol::kMaxRow}}},
            {"minItems", min_items},
            {"maxItems", protocol::kMaxRow},
            {"description", "Breadboard rows, 1..50."}};
}

json text(const char* description) {
    return {{"type", "string"}, {"maxLength", kMaxTextLength}, {"description", description}};
}

json object_schema(json properties, json required) {
    return {{"type", "object"},
            {"properties", std::move(properties)},
            {"required", std::move(required)},
            {"additionalProperties", false}};
}

std::vector<ToolSchema> build_registry() {
    const json mv = {{"type", "integer"},
                     {"minimum", protocol::kMinMillivolts},
                     {"maximum", protocol::kMaxMillivolts}};
    const json ms = {{"type", "integer"},
                     {"minimum", protocol::kMinDurationMs},
                     {"maximum", protocol::kMaxDurationMs}};
    const json group = text("Title of the test group; tests with the same title share a group.");
    const json title = text("Short name of the test.");

    std::vector<ToolSchema> tools;
    tools.push_back({ToolKind::HighlightRows, "highlight_rows",
                     "Light the indicator LEDs of breadboard rows.",
                     object_schema({{"rows", row_list(1)},
                                    {"pattern",
                                     {{"type", "string"},
                                      {"enum", {"on", "off", "blink", "blink_slow"}}}}},
                                   {"rows"}),
                     true, true});
    tools.push_back({ToolKind::GetSchematic, "get_schematic",
                     "Return the current schematic as YAML.", object_schema(json::object(), json::array()),
                     true, true});
    tools.push_back(
        {ToolKind::CreateVoltageTest, "create_voltage_test",
         "Create a test that reads one analog input once.",
         object_schema({{"group", group},
                        {"title", title},
                        {"probe_pin", pin_enum(protocol::analog_in_pins())},
                        {"probe_rows", row_list(1)},
                        {"expected_mv",
                         {{"type", "array"}, {"items", mv}, {"minItems", 2}, {"maxItems", 2},
                          {"description", "Inclusive [min, max] in millivolts."}}},
                        {"instruction", text("What the user should connect.")}},
                       {"group", "probe_pin", "probe_rows"}),
         false, true});
    tools.push_back(
        {ToolKind::CreateSignalTest, "create_signal_test",
         "Create a test that drives a voltage pattern and observes the response.",
         object_schema(
             {{"group", group},
              {"title", title},
              {"drive_pin", pin_enum(protocol::signal_out_pins())},
              {"steps",
               {{"type", "array"},
                {"items", object_schema({{"mv", mv}, {"ms", ms}}, {"mv", "ms"})},
                {"minItems", 1},
                {"maxItems", kMaxSignalSteps}}},
              {"repeat", {{"type", "integer"}, {"minimum", 1}, {"maximum", kMaxSignalRepeat}}},
              {"observe",
               {{"type", "object"},
                {"oneOf",
                 {object_schema({{"pin", pin_enum(protocol::analog_in_pins())}}, {"pin"}),
                  object_schema({{"component", {{"type", "string"}}}}, {"component"})}}}},
              {"probe_rows", row_list(0)},
              {"interval_ms",
               {{"type", "integer"}, {"minimum", kMinIntervalMs}, {"maximum", kMaxIntervalMs}}}},
             {"group", "drive_pin", "steps", "observe"}),
         false, true});
    tools.push_back({ToolKind::CreateInspectionTest, "create_inspection_test",
                     "Create a test where the user observes the circuit and reports back.",
                     object_schema({{"group", group},
                                    {"title", title},
                                    {"instruction", text("What the user should do.")},
                                    {"prompt", text("Question the user answers.")},
                                    {"probe_rows", row_list(0)}},
                                   {"group", "instruction", "prompt"}),
                     false, true});
    tools.push_back({ToolKind::CreateConnectionSuggestion, "create_connection_suggestion",
                     "Suggest a wire between two breadboard rows.",
                     object_schema({{"from_row", row_list(1)["items"]},
                                    {"to_row", row_list(1)["items"]},
                                    {"description", text("What to change and why.")}},
                                   {"from_row", "to_row", "description"}),
                     true, false});
    tools.push_back({ToolKind::CreateComponentSuggestion, "create_component_suggestion",
                     "Suggest adding a component across breadboard rows.",
                     object_schema({{"component_kind", text("Kind of part, e.g. resistor.")},
                                    {"rows", row_list(1)},
                                    {"description", text("What to add and why.")}},
                                   {"component_kind", "rows", "description"}),
                     true, false});
    return tools;
}

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::InvalidParams, what); }
[[noreturn]] void out_of_bounds(const std::string& what) { fail(ErrorCode::ParamOutOfBounds, what); }

class Args {
public:
    Args(const json& j, std::initializer_list<const char*> allowed) : j_(j) {
        if (!j.is_object()) {
            invalid("arguments must be an object");
        }
        for (const auto& [key, _] : j.items()) {
            if (std::none_of(allowed.begin(), allowed.end(),
                             [&](const char* a) { return key == a; })) {
                invalid("unexpected argument '" + key + "'");
            }
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const json& at(const char* key) const {
        if (!has(key)) {
            invalid(std::string("missing argument '") + key + "'");
        }
        return j_.at(key);
    }

    std::string str(const char* key, bool allow_empty = false) const {
        const json& v = at(key);
        if (!v.is_string()) {
            invalid(std::string("'") + key + "' must be a string");
        }
        auto s = v.get<std::string>();
        if (!allow_empty && s.empty()) {
            invalid(std::string("'") + key + "' must not be empty");
        }
        if (s.size() > kMaxTextLength) {
            out_of_bounds(std::string("'") + key + "' longer than " +
                          std::to_string(kMaxTextLength) + " characters");
        }
        return s;
    }

    std::string opt_str(const char* key) const { return has(key) ? str(key, true) : std::string(); }

private:
    const json& j_;
};

int integer(const json& v, const std::string& what, int lo, int hi) {
    if (!v.is_number_integer()) {
        invalid(what + " must be an integer");
    }
    const bool huge = v.is_number_unsigned() &&
                      v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX);
    const std::int64_t n = huge ? INT64_MAX : v.get<std::int64_t>();
    if (n < lo || n > hi) {
        out_of_bounds(what + " = " + v.dump() + " outside " + std::to_string(lo) + ".." +
                      std::to_string(hi));
    }
    return static_cast<int>(n);
}

std::vector<int> rows(const json& v, const std::string& what, bool allow_empty) {
    if (!v.is_array()) {
        invalid(what + " must be an array of rows");
    }
    std::set<int> out;
    for (const auto& r : v) {
        out.insert(integer(r, what + " entry", protocol::kMinRow, protocol::kMaxRow));
    }
    if (out.empty() && !allow_empty) {
        invalid(what + " must not be empty");
    }
    return {out.begin(), out.end()};
}

PinId pin(const json& v, const std::string& what, bool analog_in) {
    if (!v.is_string()) {
        invalid(what + " must be a pin name");
    }
    PinId p(v.get<std::string>());
    if (analog_in ? !p.is_analog_in() : !p.is_signal_out()) {
        invalid(what + " '" + p.name() + "' is not " +
                (analog_in ? "an analog input (A0..A3)" : "a signal output (D0..D3)"));
    }
    return p;
}

HighlightRowsArgs parse_highlight(const json& j) {
    Args a(j, {"rows", "pattern"});
    HighlightRowsArgs out;
    out.rows = rows(a.at("rows"), "rows", false);
    if (a.has("pattern")) {
        auto p = protocol::led_pattern_from_string(a.str("pattern"));
        if (!p) {
            invalid("unknown pattern '" + a.str("pattern") + "'");
        }
        out.pattern = *p;
    }
    return out;
}

VoltageTestArgs parse_voltage(const json& j) {
    Args a(j, {"group", "title", "probe_pin", "probe_rows", "expected_mv", "instruction"});
    VoltageTestArgs out;
    out.group = a.str("group");
    out.title = a.opt_str("title");
    out.probe_pin = pin(a.at("probe_pin"), "probe_pin", true);
    out.probe_rows = rows(a.at("probe_rows"), "probe_rows", false);
    if (a.has("expected_mv")) {
        const json& r = a.at("expected_mv");
        if (!r.is_array() || r.size() != 2) {
            invalid("expected_mv must be [min, max]");
        }
        const int lo = integer(r[0], "expected_mv[0]", protocol::kMinMillivolts, protocol::kMaxMillivolts);
        const int hi = integer(r[1], "expected_mv[1]", protocol::kMinMillivolts, protocol::kMaxMillivolts);
        if (lo > hi) {
            invalid("expected_mv min exceeds max");
        }
        out.expected = MillivoltRange{lo, hi};
    }
    out.instruction = a.opt_str("instruction");
    return out;
}

SignalTestArgs parse_signal(const json& j) {
    Args a(j, {"group", "title", "drive_pin", "steps", "repeat", "observe", "probe_rows",
               "interval_ms"});
    SignalTestArgs out;
    out.group = a.str("group");
    out.title = a.opt_str("title");
    out.drive_pin = pin(a.at("drive_pin"), "drive_pin", false);

    const json& steps = a.at("steps");
    if (!steps.is_array() || steps.empty()) {
        invalid("steps must be a non-empty array");
    }
    if (steps.size() > static_cast<std::size_t>(kMaxSignalSteps)) {
        out_of_bounds("more than " + std::to_string(kMaxSignalSteps) + " steps");
    }
    std::vector<SequenceStep> pattern;
    for (const auto& s : steps) {
        Args step(s, {"mv", "ms"});
        pattern.push_back(
            {integer(step.at("mv"), "step mv", protocol::kMinMillivolts, protocol::kMaxMillivolts),
             integer(step.at("ms"), "step ms", protocol::kMinDurationMs, protocol::kMaxDurationMs)});
    }
    const int repeat = a.has("repeat") ? integer(a.at("repeat"), "repeat", 1, kMaxSignalRepeat) : 1;
    std::int64_t total = 0;
    for (int i = 0; i < repeat; ++i) {
        for (const auto& s : pattern) {
            out.steps.push_back(s);
            total += s.duration_ms;
        }
    }
    if (total > kMaxSignalDurationMs) {
        out_of_bounds("pattern lasts " + std::to_string(total) + " ms, more than " +
                      std::to_string(kMaxSignalDurationMs));
    }

    Args observe(a.at("observe"), {"pin", "component"});
    if (observe.has("pin") == observe.has("component")) {
        invalid("observe needs exactly one of 'pin' or 'component'");
    }
    if (observe.has("pin")) {
        out.observe = pin(observe.at("pin"), "observe.pin", true);
    } else {
        out.observe = ComponentTarget{observe.str("component")};
    }
    if (a.has("probe_rows")) {
        out.probe_rows = rows(a.at("probe_rows"), "probe_rows", true);
    }
    if (a.has("interval_ms")) {
        out.interval_ms = integer(a.at("interval_ms"), "interval_ms", kMinIntervalMs, kMaxIntervalMs);
    }
    return out;
}

InspectionTestArgs parse_inspection(const json& j) {
    Args a(j, {"group", "title", "instruction", "prompt", "probe_rows"});
    InspectionTestArgs out;
    out.group = a.str("group");
    out.title = a.opt_str("title");
    out.instruction = a.str("instruction");
    out.prompt = a.str("prompt");
    if (a.has("probe_rows")) {
        out.probe_rows = rows(a.at("probe_rows"), "probe_rows", true);
    }
    return out;
}

ConnectionSuggestionArgs parse_connection(const json& j) {
    Args a(j, {"from_row", "to_row", "description"});
    return {integer(a.at("from_row"), "from_row", protocol::kMinRow, protocol::kMaxRow),
            integer(a.at("to_row"), "to_row", protocol::kMinRow, protocol::kMaxRow),
            a.str("description")};
}

ComponentSuggestionArgs parse_component(const json& j) {
    Args a(j, {"component_kind", "rows", "description"});
    return {a.str("component_kind"), rows(a.at("rows"), "rows", false), a.str("description")};
}

}  // namespace

bool ToolSchema::creates_test() const {
    return kind == ToolKind::CreateVoltageTest || kind == ToolKind::CreateSignalTest ||
           kind == ToolKind::CreateInspectionTest;
}

bool ToolSchema::creates_suggestion() const {
    return kind == ToolKind::CreateConnectionSuggestion || kind == ToolKind::CreateComponentSuggestion;
}

std::span<const ToolSchema> tool_registry() {
    static const std::vector<ToolSchema> registry = build_registry();
    return registry;
}

const ToolSchema* find_tool(std::string_view name) {
    for (const auto& t : tool_registry()) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

std::vector<ToolSchema> tools_for_mode(Mode mode) {
    std::vector<ToolSchema> out;
    for (const auto& t : tool_registry()) {
        if (t.available_in(mode)) {
            out.push_back(t);
        }
    }
    return out;
}

ToolArgs parse_tool_args(const ToolSchema& tool, const json& arguments) {
    switch (tool.kind) {
        case ToolKind::HighlightRows: return parse_highlight(arguments);
        case ToolKind::GetSchematic: Args(arguments, {}); return GetSchematicArgs{};
        case ToolKind::CreateVoltageTest: return parse_voltage(arguments);
        case ToolKind::CreateSignalTest: return parse_signal(arguments);
        case ToolKind::CreateInspectionTest: return parse_inspection(arguments);
        case ToolKind::CreateConnectionSuggestion: return parse_connection(arguments);
        case ToolKind::CreateComponentSuggestion: return parse_component(arguments);
    }
    invalid("unhandled tool");
}

}  // namespace rowlight::agent
