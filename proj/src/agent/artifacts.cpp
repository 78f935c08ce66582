#include "rowlight/artifacts.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace rowlight::agent {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Lifecycle, std::string_view>, 6> kLifecycle{{
    {Lifecycle::Created, "Created"},
    {Lifecycle::ProbesHighlighted, "ProbesHighlighted"},
    {Lifecycle::Running, "Running"},
    {Lifecycle::ResultCaptured, "ResultCaptured"},
    {Lifecycle::Submitted, "Submitted"},
    {Lifecycle::Interpreted, "Interpreted"},
}};

constexpr std::array<std::pair<Verdict, std::string_view>, 3> kVerdicts{{
    {Verdict::Pass, "Pass"},
    {Verdict::Fail, "Fail"},
    {Verdict::Inconclusive, "Inconclusive"},
}};

constexpr std::array<std::pair<SuggestionState, std::string_view>, 3> kSuggestionStates{{
    {SuggestionState::Open, "Open"},
    {SuggestionState::HighlightShown, "HighlightShown"},
    {SuggestionState::Completed, "Completed"},
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

[[noreturn]] void bad(const json& j, const std::string& what) {
    throw json::other_error::create(501, what, &j);
}

template <typename E, std::size_t N>
E enum_field(const std::array<std::pair<E, std::string_view>, N>& table, const json& j,
             const char* key) {
    const auto s = j.at(key).get<std::string>();
    auto v = value_of(table, s);
    if (!v) {
        bad(j, std::string("bad ") + key + " '" + s + "'");
    }
    return *v;
}

std::string range_text(const MillivoltRange& r) {
    return "[" + std::to_string(r.min_mv) + "," + std::to_string(r.max_mv) + "]";
}

std::string verdict_word(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

json kind_to_json(const TestKind& kind) {
    return std::visit(
        [](const auto& k) -> json {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, VoltageMeasurement>) {
                json j = {{"probe_pin", k.probe_pin.name()}};
                if (k.expected) {
                    j["expected_mv"] = {k.expected->min_mv, k.expected->max_mv};
                }
                return j;
            } else if constexpr (std::is_same_v<T, SignalPattern>) {
                json steps = json::array();
                for (const auto& s : k.steps) {
                    steps.push_back({{"mv", s.millivolts}, {"ms", s.duration_ms}});
                }
                json observe;
                if (const auto* pin = std::get_if<PinId>(&k.observe)) {
                    observe = {{"pin", pin->name()}};
                } else {
                    observe = {{"component", std::get<ComponentTarget>(k.observe).component_id}};
                }
                return {{"drive_pin", k.drive_pin.name()},
                        {"steps", steps},
                        {"observe", observe},
                        {"interval_ms", k.interval_ms}};
            } else {
                return {{"instruction", k.instruction}, {"prompt", k.prompt}};
            }
        },
        kind);
}

TestKind kind_from_json(std::string_view name, const json& j) {
    if (name == "voltage_measurement") {
        VoltageMeasurement v{PinId(j.at("probe_pin").get<std::string>()), std::nullopt};
        if (j.contains("expected_mv")) {
            const auto& r = j.at("expected_mv");
            v.expected = MillivoltRange{r.at(0).get<int>(), r.at(1).get<int>()};
        }
        return v;
    }
    if (name == "signal_pattern") {
        SignalPattern s;
        s.drive_pin = PinId(j.at("drive_pin").get<std::string>());
        for (const auto& step : j.at("steps")) {
            s.steps.push_back({step.at("mv").get<int>(), step.at("ms").get<int>()});
        }
        const auto& observe = j.at("observe");
        if (observe.contains("pin")) {
            s.observe = PinId(observe.at("pin").get<std::string>());
        } else {
            s.observe = ComponentTarget{observe.at("component").get<std::string>()};
        }
        s.interval_ms = j.at("interval_ms").get<int>();
        return s;
    }
    if (name == "visual_inspection") {
        return VisualInspection{j.at("instruction").get<std::string>(),
                                j.at("prompt").get<std::string>()};
    }
    bad(j, "unknown test kind '" + std::string(name) + "'");
}

}  // namespace

std::string_view to_string(Lifecycle state) { return name_of(kLifecycle, state); }
std::optional<Lifecycle> lifecycle_from_string(std::string_view s) {
    return value_of(kLifecycle, s);
}
std::string_view to_string(Verdict verdict) { return name_of(kVerdicts, verdict); }
std::optional<Verdict> verdict_from_string(std::string_view s) { return value_of(kVerdicts, s); }
std::string_view to_string(SuggestionState state) { return name_of(kSuggestionStates, state); }
std::optional<SuggestionState> suggestion_state_from_string(std::string_view s) {
    return value_of(kSuggestionStates, s);
}

std::string_view to_string(TestOp op) {
    switch (op) {
        case TestOp::HighlightProbes: return "highlight";
        case TestOp::Run: return "run";
        case TestOp::RecordObservation: return "observe";
        case TestOp::Submit: return "submit";
        case TestOp::Interpret: return "interpret";
    }
    return "?";
}

std::string_view kind_name(const TestKind& kind) {
    switch (kind.index()) {
        case 0: return "voltage_measurement";
        case 1: return "signal_pattern";
        default: return "visual_inspection";
    }
}

bool result_fits(const TestKind& kind, const TestResult& result) {
    return (std::holds_alternative<VoltageMeasurement>(kind) &&
            std::holds_alternative<Reading>(result)) ||
           (std::holds_alternative<SignalPattern>(kind) &&
            std::holds_alternative<TimeSeries>(result)) ||
           (std::holds_alternative<VisualInspection>(kind) &&
            std::holds_alternative<Observation>(result));
}

std::vector<int> Suggestion::rows() const {
    if (const auto* c = std::get_if<ConnectionSuggestion>(&kind)) {
        if (c->from_row == c->to_row) {
            return {c->from_row};
        }
        return {std::min(c->from_row, c->to_row), std::max(c->from_row, c->to_row)};
    }
    return std::get<ComponentSuggestion>(kind).rows;
}

TestItem* ArtifactBook::find_test(std::string_view id) {
    auto it = std::find_if(tests.begin(), tests.end(), [&](const TestItem& t) { return t.id == id; });
    return it == tests.end() ? nullptr : &*it;
}

const TestItem* ArtifactBook::find_test(std::string_view id) const {
    return const_cast<ArtifactBook*>(this)->find_test(id);
}

Suggestion* ArtifactBook::find_suggestion(std::string_view id) {
    auto it = std::find_if(suggestions.begin(), suggestions.end(),
                           [&](const Suggestion& s) { return s.id == id; });
    return it == suggestions.end() ? nullptr : &*it;
}

const Suggestion* ArtifactBook::find_suggestion(std::string_view id) const {
    return const_cast<ArtifactBook*>(this)->find_suggestion(id);
}

const TestGroup* ArtifactBook::find_group_by_title(std::string_view title) const {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const TestGroup& g) { return g.title == title; });
    return it == groups.end() ? nullptr : &*it;
}

std::optional<Lifecycle> next_state(bool visual, Lifecycle state, TestOp op) {
    using L = Lifecycle;
    const bool fresh = state == L::Created || state == L::ProbesHighlighted;
    switch (op) {
        case TestOp::HighlightProbes:
            if (fresh) {
                return L::ProbesHighlighted;
            }
            break;
        case TestOp::Run:
            if (!visual && (fresh || state == L::Running)) {
                return L::ResultCaptured;
            }
            break;
        case TestOp::RecordObservation:
            if (visual && fresh) {
                return L::ResultCaptured;
            }
            break;
        case TestOp::Submit:
            if (state == L::ResultCaptured || (visual && fresh)) {
                return L::Submitted;
            }
            break;
        case TestOp::Interpret:
            if (state == L::Submitted) {
                return L::Interpreted;
            }
            break;
    }
    return std::nullopt;
}

Verdict verdict_for_reading(int value_mv, const std::optional<MillivoltRange>& expected) {
    if (!expected) {
        return Verdict::Inconclusive;
    }
    return expected->contains(value_mv) ? Verdict::Pass : Verdict::Fail;
}

Verdict local_verdict(const TestItem& item) {
    const auto* voltage = std::get_if<VoltageMeasurement>(&item.kind);
    const Reading* reading = item.result ? std::get_if<Reading>(&*item.result) : nullptr;
    if (voltage && reading) {
        return verdict_for_reading(reading->value_mv, voltage->expected);
    }
    return Verdict::Inconclusive;
}

std::string fallback_interpretation(const TestItem& item) {
    const std::string tail = ": " + verdict_word(local_verdict(item));
    if (!item.result) {
        return "no result captured" + tail;
    }
    return std::visit(
        [&](const auto& r) -> std::string {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Reading>) {
                std::string text = "measured " + std::to_string(r.value_mv) + " mV";
                if (r.floating) {
                    text += " (input floating)";
                }
                const auto& expected = std::get<VoltageMeasurement>(item.kind).expected;
                if (!expected) {
                    return text + ", no expected range" + tail;
                }
                return text + (expected->contains(r.value_mv) ? " within " : " outside ") +
                       range_text(*expected) + tail;
            } else if constexpr (std::is_same_v<T, TimeSeries>) {
                if (r.samples.empty()) {
                    return "captured no samples on " + r.pin.name() + tail;
                }
                auto [lo, hi] = std::minmax_element(
                    r.samples.begin(), r.samples.end(),
                    [](const auto& a, const auto& b) { return a.value_mv < b.value_mv; });
                return "captured " + std::to_string(r.samples.size()) + " samples on " +
                       r.pin.name() + " (min " + std::to_string(lo->value_mv) + " mV, max " +
                       std::to_string(hi->value_mv) + " mV)" + tail;
            } else {
                return "observation: \"" + r.text + "\"" + tail;
            }
        },
        *item.result);
}

json series_to_json(const TimeSeries& series) {
    json samples = json::array();
    for (const auto& s : series.samples) {
        samples.push_back({s.t_ms, s.value_mv});
    }
    return {{"pin", series.pin.name()}, {"interval_ms", series.interval_ms}, {"samples", samples}};
}

TimeSeries series_from_json(const json& j) {
    TimeSeries series{PinId(j.at("pin").get<std::string>()), j.at("interval_ms").get<int>(), {}};
    for (const auto& s : j.at("samples")) {
        series.samples.push_back({s.at(0).get<std::int64_t>(), s.at(1).get<int>()});
    }
    return series;
}

void to_json(json& j, const TestResult& result) {
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Reading>) {
                j = {{"type", "reading"}, {"value_mv", r.value_mv}, {"floating", r.floating}};
            } else if constexpr (std::is_same_v<T, TimeSeries>) {
                j = series_to_json(r);
                j["type"] = "series";
            } else {
                j = {{"type", "observation"}, {"text", r.text}};
            }
        },
        result);
}

TestResult test_result_from_json(const json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "reading") {
        return Reading{j.at("value_mv").get<int>(), j.value("floating", false)};
    }
    if (type == "series") {
        return series_from_json(j);
    }
    if (type == "observation") {
        return Observation{j.at("text").get<std::string>()};
    }
    bad(j, "unknown result type '" + type + "'");
}

void to_json(json& j, const TestItem& item) {
    j = {{"id", item.id},
         {"group_id", item.group_id},
         {"title", item.title},
         {"kind", kind_name(item.kind)},
         {"spec", kind_to_json(item.kind)},
         {"probe_rows", item.probe_rows},
         {"state", to_string(item.state)}};
    if (item.result) {
        j["result"] = *item.result;
    }
    if (item.verdict) {
        j["verdict"] = to_string(*item.verdict);
    }
    if (item.interpretation) {
        j["interpretation"] = *item.interpretation;
    }
}

void from_json(const json& j, TestItem& item) {
    item.id = j.at("id").get<std::string>();
    item.group_id = j.at("group_id").get<std::string>();
    item.title = j.value("title", "");
    item.kind = kind_from_json(j.at("kind").get<std::string>(), j.at("spec"));
    item.probe_rows = j.at("probe_rows").get<std::vector<int>>();
    item.state = enum_field(kLifecycle, j, "state");
    item.result.reset();
    if (j.contains("result")) {
        item.result = test_result_from_json(j.at("result"));
    }
    item.verdict.reset();
    if (j.contains("verdict")) {
        item.verdict = enum_field(kVerdicts, j, "verdict");
    }
    item.interpretation.reset();
    if (j.contains("interpretation")) {
        item.interpretation = j.at("interpretation").get<std::string>();
    }
}

void to_json(json& j, const TestGroup& group) {
    j = {{"id", group.id}, {"title", group.title}, {"test_ids", group.test_ids}};
}

void from_json(const json& j, TestGroup& group) {
    group.id = j.at("id").get<std::string>();
    group.title = j.at("title").get<std::string>();
    group.test_ids = j.at("test_ids").get<std::vector<std::string>>();
}

void to_json(json& j, const Suggestion& suggestion) {
    if (const auto* c = std::get_if<ConnectionSuggestion>(&suggestion.kind)) {
        j = {{"id", suggestion.id},
             {"kind", "connection"},
             {"from_row", c->from_row},
             {"to_row", c->to_row},
             {"description", c->description}};
    } else {
        const auto& k = std::get<ComponentSuggestion>(suggestion.kind);
        j = {{"id", suggestion.id},
             {"kind", "component"},
             {"component_kind", k.component_kind},
             {"rows", k.rows},
             {"description", k.description}};
    }
    j["state"] = to_string(suggestion.state);
}

void from_json(const json& j, Suggestion& suggestion) {
    suggestion.id = j.at("id").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "connection") {
        suggestion.kind = ConnectionSuggestion{j.at("from_row").get<int>(), j.at("to_row").get<int>(),
                                               j.at("description").get<std::string>()};
    } else if (kind == "component") {
        suggestion.kind = ComponentSuggestion{j.at("component_kind").get<std::string>(),
                                              j.at("rows").get<std::vector<int>>(),
                                              j.at("description").get<std::string>()};
    } else {
        bad(j, "unknown suggestion kind '" + kind + "'");
    }
    suggestion.state = enum_field(kSuggestionStates, j, "state");
}

}  // namespace rowlight::agent
