#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rowlight/device.hpp"

namespace rowlight::agent {

using device::SequenceStep;
using device::TimeSeries;
using protocol::PinId;

enum class Lifecycle { Created, ProbesHighlighted, Running, ResultCaptured, Submitted, Interpreted };

std::string_view to_string(Lifecycle state);
std::optional<Lifecycle> lifecycle_from_string(std::string_view s);

enum class Verdict { Pass, Fail, Inconclusive };

std::string_view to_string(Verdict verdict);
std::optional<Verdict> verdict_from_string(std::string_view s);

struct MillivoltRange {
    int min_mv = 0;
    int max_mv = 0;

    bool contains(int mv) const { return mv >= min_mv && mv <= max_mv; }
    bool operator==(const MillivoltRange&) const = default;
};

struct ComponentTarget {
    std::string component_id;
    bool operator==(const ComponentTarget&) const = default;
};

// What a signal test watches: an analog input that gets sampled, or a
// component the user observes (its rows are highlighted).
using ProbeTarget = std::variant<PinId, ComponentTarget>;

struct VoltageMeasurement {
    PinId probe_pin;
    std::optional<MillivoltRange> expected;
    bool operator==(const VoltageMeasurement&) const = default;
};

struct SignalPattern {
    PinId drive_pin;
    std::vector<SequenceStep> steps;  // non-empty
    ProbeTarget observe;
    int interval_ms = 10;
    bool operator==(const SignalPattern&) const = default;
};

struct VisualInspection {
    std::string instruction;
    std::string prompt;
    bool operator==(const VisualInspection&) const = default;
};

using TestKind = std::variant<VoltageMeasurement, SignalPattern, VisualInspection>;

std::string_view kind_name(const TestKind& kind);

struct Reading {
    int value_mv = 0;
    bool floating = false;
    bool operator==(const Reading&) const = default;
};

struct Observation {
    std::string text;
    bool operator==(const Observation&) const = default;
};

using TestResult = std::variant<TimeSeries, Reading, Observation>;

// Reading ↔ VoltageMeasurement, TimeSeries ↔ SignalPattern,
// Observation ↔ VisualInspection.
bool result_fits(const TestKind& kind, const TestResult& result);

struct TestItem {
    std::string id;
    std::string group_id;
    std::string title;
    TestKind kind;
    std::vector<int> probe_rows;  // sorted, unique, each in 1..50
    Lifecycle state = Lifecycle::Created;
    std::optional<TestResult> result;
    std::optional<Verdict> verdict;
    std::optional<std::string> interpretation;

    bool is_visual() const { return std::holds_alternative<VisualInspection>(kind); }
    bool operator==(const TestItem&) const = default;
};

struct TestGroup {
    std::string id;
    std::string title;
    std::vector<std::string> test_ids;
    bool operator==(const TestGroup&) const = default;
};

enum class SuggestionState { Open, HighlightShown, Completed };

std::string_view to_string(SuggestionState state);
std::optional<SuggestionState> suggestion_state_from_string(std::string_view s);

struct ConnectionSuggestion {
    int from_row = 1;
    int to_row = 1;
    std::string description;
    bool operator==(const ConnectionSuggestion&) const = default;
};

struct ComponentSuggestion {
    std::string component_kind;
    std::vector<int> rows;
    std::string description;
    bool operator==(const ComponentSuggestion&) const = default;
};

struct Suggestion {
    std::string id;
    std::variant<ConnectionSuggestion, ComponentSuggestion> kind;
    SuggestionState state = SuggestionState::Open;

    std::vector<int> rows() const;
    bool operator==(const Suggestion&) const = default;
};

struct ArtifactBook {
    std::vector<TestGroup> groups;
    std::vector<TestItem> tests;
    std::vector<Suggestion> suggestions;

    TestItem* find_test(std::string_view id);
    const TestItem* find_test(std::string_view id) const;
    Suggestion* find_suggestion(std::string_view id);
    const Suggestion* find_suggestion(std::string_view id) const;
    const TestGroup* find_group_by_title(std::string_view title) const;

    bool operator==(const ArtifactBook&) const = default;
};

// Lifecycle operations a user or the agent can apply to a test.
enum class TestOp { HighlightProbes, Run, RecordObservation, Submit, Interpret };

std::string_view to_string(TestOp op);

// Target state of `op` from `state`, or nullopt when the lifecycle forbids it.
// Submit on a visual test in Created/ProbesHighlighted lands in Submitted
// (observation capture and submission in one step). Run from Running is
// allowed so that a run interrupted by a crash can be resumed.
std::optional<Lifecycle> next_state(bool visual, Lifecycle state, TestOp op);

Verdict verdict_for_reading(int value_mv, const std::optional<MillivoltRange>& expected);

// Deterministic verdict from the captured result; Inconclusive without one.
Verdict local_verdict(const TestItem& item);

// Text used when no agent interpretation is available, e.g.
// "measured 2500 mV within [2300,2700]: pass".
std::string fallback_interpretation(const TestItem& item);

void to_json(nlohmann::json& j, const TestResult& result);
TestResult test_result_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const TestItem& item);
void from_json(const nlohmann::json& j, TestItem& item);
void to_json(nlohmann::json& j, const TestGroup& group);
void from_json(const nlohmann::json& j, TestGroup& group);
void to_json(nlohmann::json& j, const Suggestion& suggestion);
void from_json(const nlohmann::json& j, Suggestion& suggestion);

nlohmann::json series_to_json(const TimeSeries& series);
TimeSeries series_from_json(const nlohmann::json& j);

}  // namespace rowlight::agent
