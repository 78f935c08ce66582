#include "rowlight/session_state.hpp"

#include <algorithm>

#include "rowlight/error.hpp"

namespace rowlight::agent {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void refresh_context(SessionState& state) {
    if (!state.schematic) {
        state.selected_context.clear();
        return;
    }
    std::vector<std::string> ids;
    for (const auto& e : state.selected_context) {
        if (state.schematic->netlist.find_component(e.id)) {
            ids.push_back(e.id);
        }
    }
    state.selected_context = netlist::extract_component_context(state.schematic->netlist, ids);
}

json response_json(const protocol::BoardResponse& r) {
    json j = {{"ok", r.ok}};
    if (r.value_mv) {
        j["mv"] = *r.value_mv;
    }
    if (r.error) {
        j["error"] = *r.error;
    }
    return j;
}

protocol::BoardResponse response_from(const json& j) {
    protocol::BoardResponse r;
    r.ok = j.at("ok").get<bool>();
    if (j.contains("mv")) {
        r.value_mv = j.at("mv").get<int>();
    }
    if (j.contains("error")) {
        r.error = j.at("error").get<std::string>();
    }
    return r;
}

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorCode::LogCorrupt, what); }

}  // namespace

std::vector<std::string> SessionState::pending_artifacts() const {
    std::vector<std::string> out;
    for (const auto& t : artifacts.tests) {
        if (t.state != Lifecycle::Interpreted) {
            out.push_back(t.id);
        }
    }
    for (const auto& s : artifacts.suggestions) {
        if (s.state != SuggestionState::Completed) {
            out.push_back(s.id);
        }
    }
    return out;
}

std::string_view event_type(const SessionEvent& event) {
    return std::visit(overloaded{
                          [](const SessionOpened&) { return "SessionOpened"; },
                          [](const TurnAppended&) { return "TurnAppended"; },
                          [](const ModeChanged&) { return "ModeChanged"; },
                          [](const SchematicSynced&) { return "SchematicSynced"; },
                          [](const ContextSelected&) { return "ContextSelected"; },
                          [](const ArtifactCreated&) { return "ArtifactCreated"; },
                          [](const ArtifactStateChanged&) { return "ArtifactStateChanged"; },
                          [](const DeviceCommand&) { return "DeviceCommand"; },
                          [](const StatusChanged&) { return "StatusEvent"; },
                      },
                      event);
}

void apply(SessionState& state, const SessionEvent& event) {
    std::visit(
        overloaded{
            [&](const SessionOpened& e) {
                state.session_id = e.session_id;
                state.instructions_version = e.instructions_version;
            },
            [&](const TurnAppended& e) { state.turns.push_back(e.turn); },
            [&](const ModeChanged& e) { state.mode = e.mode; },
            [&](const SchematicSynced& e) {
                netlist::Netlist n = netlist::parse_yaml(e.yaml);
                n.revision = e.revision;
                state.schematic = SchematicSnapshot{std::move(n), e.yaml};
                state.schematic_revision = e.revision;
                refresh_context(state);
            },
            [&](const ContextSelected& e) { state.selected_context = e.entries; },
            [&](const ArtifactCreated& e) {
                if (const auto* test = std::get_if<TestItem>(&e.artifact)) {
                    if (e.new_group) {
                        state.artifacts.groups.push_back(*e.new_group);
                    }
                    auto g = std::find_if(state.artifacts.groups.begin(), state.artifacts.groups.end(),
                                          [&](const TestGroup& grp) { return grp.id == test->group_id; });
                    if (g == state.artifacts.groups.end()) {
                        fail(ErrorCode::LogCorrupt, "test " + test->id + " names unknown group " +
                                                        test->group_id);
                    }
                    if (std::find(g->test_ids.begin(), g->test_ids.end(), test->id) ==
                        g->test_ids.end()) {
                        g->test_ids.push_back(test->id);
                    }
                    state.artifacts.tests.push_back(*test);
                } else {
                    state.artifacts.suggestions.push_back(std::get<Suggestion>(e.artifact));
                }
            },
            [&](const ArtifactStateChanged& e) {
                if (auto* t = state.artifacts.find_test(e.id)) {
                    if (e.test_state) {
                        t->state = *e.test_state;
                    }
                    if (e.result) {
                        t->result = e.result;
                    }
                    if (e.verdict) {
                        t->verdict = e.verdict;
                    }
                    if (e.interpretation) {
                        t->interpretation = e.interpretation;
                    }
                } else if (auto* s = state.artifacts.find_suggestion(e.id)) {
                    if (e.suggestion_state) {
                        s->state = *e.suggestion_state;
                    }
                } else {
                    fail(ErrorCode::LogCorrupt, "state change for unknown artifact " + e.id);
                }
            },
            [](const DeviceCommand&) {},
            [&](const StatusChanged& e) {
                state.last_status = e.status;
                if (e.status.kind == StatusEvent::Kind::Responded) {
                    ++state.completed_queries;
                }
            },
        },
        event);
}

json event_data(const SessionEvent& event) {
    return std::visit(
        overloaded{
            [](const SessionOpened& e) -> json {
                return {{"session_id", e.session_id},
                        {"instructions_version", e.instructions_version}};
            },
            [](const TurnAppended& e) -> json { return e.turn; },
            [](const ModeChanged& e) -> json { return {{"mode", to_string(e.mode)}}; },
            [](const SchematicSynced& e) -> json {
                return {{"yaml", e.yaml}, {"revision", e.revision}};
            },
            [](const ContextSelected& e) -> json { return {{"entries", e.entries}}; },
            [](const ArtifactCreated& e) -> json {
                if (const auto* test = std::get_if<TestItem>(&e.artifact)) {
                    json j = {{"test", *test}};
                    if (e.new_group) {
                        j["group"] = *e.new_group;
                    }
                    return j;
                }
                return {{"suggestion", std::get<Suggestion>(e.artifact)}};
            },
            [](const ArtifactStateChanged& e) -> json {
                json j = {{"id", e.id}};
                if (e.test_state) {
                    j["state"] = to_string(*e.test_state);
                }
                if (e.suggestion_state) {
                    j["suggestion_state"] = to_string(*e.suggestion_state);
                }
                if (e.result) {
                    j["result"] = *e.result;
                }
                if (e.verdict) {
                    j["verdict"] = to_string(*e.verdict);
                }
                if (e.interpretation) {
                    j["interpretation"] = *e.interpretation;
                }
                return j;
            },
            [](const DeviceCommand& e) -> json {
                return {{"frame", e.frame}, {"response", response_json(e.response)}};
            },
            [](const StatusChanged& e) -> json { return e.status; },
        },
        event);
}

SessionEvent event_from_json(std::string_view type, const json& d) {
    if (type == "SessionOpened") {
        return SessionOpened{d.at("session_id").get<std::string>(),
                             d.at("instructions_version").get<std::string>()};
    }
    if (type == "TurnAppended") {
        return TurnAppended{d.get<Turn>()};
    }
    if (type == "ModeChanged") {
        auto mode = mode_from_string(d.at("mode").get<std::string>());
        if (!mode) {
            corrupt("unknown mode");
        }
        return ModeChanged{*mode};
    }
    if (type == "SchematicSynced") {
        return SchematicSynced{d.at("yaml").get<std::string>(), d.at("revision").get<std::int64_t>()};
    }
    if (type == "ContextSelected") {
        return ContextSelected{d.at("entries").get<std::vector<netlist::ComponentContextEntry>>()};
    }
    if (type == "ArtifactCreated") {
        ArtifactCreated e;
        if (d.contains("test")) {
            e.artifact = d.at("test").get<TestItem>();
            if (d.contains("group")) {
                e.new_group = d.at("group").get<TestGroup>();
            }
        } else {
            e.artifact = d.at("suggestion").get<Suggestion>();
        }
        return e;
    }
    if (type == "ArtifactStateChanged") {
        ArtifactStateChanged e;
        e.id = d.at("id").get<std::string>();
        if (d.contains("state")) {
            e.test_state = lifecycle_from_string(d.at("state").get<std::string>());
            if (!e.test_state) {
                corrupt("unknown lifecycle state");
            }
        }
        if (d.contains("suggestion_state")) {
            e.suggestion_state = suggestion_state_from_string(d.at("suggestion_state").get<std::string>());
            if (!e.suggestion_state) {
                corrupt("unknown suggestion state");
            }
        }
        if (d.contains("result")) {
            e.result = test_result_from_json(d.at("result"));
        }
        if (d.contains("verdict")) {
            e.verdict = verdict_from_string(d.at("verdict").get<std::string>());
            if (!e.verdict) {
                corrupt("unknown verdict");
            }
        }
        if (d.contains("interpretation")) {
            e.interpretation = d.at("interpretation").get<std::string>();
        }
        return e;
    }
    if (type == "DeviceCommand") {
        return DeviceCommand{d.at("frame").get<std::string>(), response_from(d.at("response"))};
    }
    if (type == "StatusEvent") {
        return StatusChanged{d.get<StatusEvent>()};
    }
    corrupt("unknown record type '" + std::string(type) + "'");
}

json record_to_json(const SessionLogRecord& record) {
    json j;
    j["seq"] = record.seq;
    j["at"] = record.at;
    j["type"] = event_type(record.event);
    j["data"] = event_data(record.event);
    return j;
}

SessionLogRecord record_from_json(const json& j) {
    try {
        SessionLogRecord r;
        r.seq = j.at("seq").get<std::int64_t>();
        r.at = j.at("at").get<std::int64_t>();
        r.event = event_from_json(j.at("type").get<std::string>(), j.at("data"));
        return r;
    } catch (const json::exception& e) {
        corrupt(std::string("undecodable record: ") + e.what());
    }
}

json state_to_json(const SessionState& state) {
    json j;
    j["id"] = state.session_id;
    j["instructions_version"] = state.instructions_version;
    j["mode"] = to_string(state.mode);
    j["turns"] = state.turns;
    if (state.schematic) {
        j["schematic"] = {{"revision", state.schematic_revision}, {"yaml", state.schematic->yaml}};
    } else {
        j["schematic"] = nullptr;
    }
    j["selected_context"] = state.selected_context;
    j["groups"] = state.artifacts.groups;
    j["tests"] = state.artifacts.tests;
    j["suggestions"] = state.artifacts.suggestions;
    j["pending_artifacts"] = state.pending_artifacts();
    j["completed_queries"] = state.completed_queries;
    j["status"] = state.last_status ? json(*state.last_status) : json(nullptr);
    return j;
}

}  // namespace rowlight::agent
