#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rowlight/artifacts.hpp"
#include "rowlight/conversation.hpp"
#include "rowlight/netlist.hpp"

namespace rowlight::agent {

struct SchematicSnapshot {
    netlist::Netlist netlist;
    std::string yaml;  // emit_yaml(netlist)
    bool operator==(const SchematicSnapshot&) const = default;
};

struct SessionState {
    std::string session_id;
    std::string instructions_version;
    std::vector<Turn> turns;
    Mode mode = Mode::Ask;
    std::optional<SchematicSnapshot> schematic;
    std::int64_t schematic_revision = 0;
    std::vector<netlist::ComponentContextEntry> selected_context;
    ArtifactBook artifacts;
    std::int64_t completed_queries = 0;  // queries that ended in Responded
    std::optional<StatusEvent> last_status;

    // Tests not yet interpreted and suggestions not yet completed.
    std::vector<std::string> pending_artifacts() const;

    bool operator==(const SessionState&) const = default;
};

// ---- events ---------------------------------------------------------------

struct SessionOpened {
    std::string session_id;
    std::string instructions_version;
};

struct TurnAppended {
    Turn turn;
};

struct ModeChanged {
    Mode mode = Mode::Ask;
};

// Carries the YAML only; the snapshot is re-parsed on apply.
struct SchematicSynced {
    std::string yaml;
    std::int64_t revision = 0;
};

struct ContextSelected {
    std::vector<netlist::ComponentContextEntry> entries;
};

struct ArtifactCreated {
    std::variant<TestItem, Suggestion> artifact;
    std::optional<TestGroup> new_group;  // set when the test opened a group
};

struct ArtifactStateChanged {
    std::string id;
    std::optional<Lifecycle> test_state;
    std::optional<SuggestionState> suggestion_state;
    std::optional<TestResult> result;
    std::optional<Verdict> verdict;
    std::optional<std::string> interpretation;
};

// Audit record of one board frame. Does not change the state.
struct DeviceCommand {
    std::string frame;  // without the trailing LF
    protocol::BoardResponse response;
};

struct StatusChanged {
    StatusEvent status;
};

using SessionEvent = std::variant<SessionOpened, TurnAppended, ModeChanged, SchematicSynced,
                                  ContextSelected, ArtifactCreated, ArtifactStateChanged,
                                  DeviceCommand, StatusChanged>;

struct SessionLogRecord {
    std::int64_t seq = 0;
    std::int64_t at = 0;
    SessionEvent event;
};

std::string_view event_type(const SessionEvent& event);

// The only way state changes, live or during replay.
void apply(SessionState& state, const SessionEvent& event);

nlohmann::json event_data(const SessionEvent& event);
SessionEvent event_from_json(std::string_view type, const nlohmann::json& data);

// {"seq":..,"at":..,"type":..,"data":{..}}
nlohmann::json record_to_json(const SessionLogRecord& record);
SessionLogRecord record_from_json(const nlohmann::json& j);  // throws LogCorrupt

// State as exposed to clients (GET /session/{id}/state).
nlohmann::json state_to_json(const SessionState& state);

}  // namespace rowlight::agent
