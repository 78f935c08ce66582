#include "rowlight/session.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <set>

#include "rowlight/error.hpp"
#include "rowlight/test_engine.hpp"

namespace rowlight::agent {

using nlohmann::json;

namespace {

std::int64_t system_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

bool blank(std::string_view text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string strip_lf(std::string frame) {
    while (!frame.empty() && (frame.back() == '\n' || frame.back() == '\r')) {
        frame.pop_back();
    }
    return frame;
}

}  // namespace

void to_json(json& j, const AgentOutcome& outcome) {
    j = {{"text", outcome.text}, {"actions", outcome.actions}};
}

Session::Session(SessionOptions options, RecordSink sink)
    : options_(std::move(options)), sink_(std::move(sink)) {
    if (!options_.clock) {
        options_.clock = system_ms;
    }
    if (options_.max_tool_rounds < 1) {
        options_.max_tool_rounds = 1;
    }
}

std::shared_ptr<Session> Session::create(SessionOptions options, RecordSink sink) {
    std::shared_ptr<Session> s(new Session(std::move(options), std::move(sink)));
    auto lk = s->lock();
    s->commit(SessionOpened{s->id(), std::string(system_instructions_version())});
    s->append_system_turn();
    return s;
}

std::shared_ptr<Session> Session::resume(SessionOptions options, SessionState state,
                                         std::int64_t last_seq, RecordSink sink) {
    if (options.id.empty()) {
        options.id = state.session_id;
    }
    std::shared_ptr<Session> s(new Session(std::move(options), std::move(sink)));
    auto lk = s->lock();
    s->state_ = std::move(state);
    s->seq_ = last_seq;
    if (s->state_.turns.empty()) {
        s->append_system_turn();
    }
    if (s->state_.last_status && !s->state_.last_status->terminal()) {
        s->commit(StatusChanged{{StatusEvent::Kind::Failed, "interrupted by restart"}});
    }
    return s;
}

Session::~Session() {
    if (device_) {
        device_->set_frame_observer({});
    }
}

SessionState Session::snapshot() const {
    auto lk = lock();
    return state_;
}

std::int64_t Session::last_seq() const {
    std::lock_guard g(log_mutex_);
    return seq_;
}

std::unique_lock<std::recursive_mutex> Session::lock() const {
    return std::unique_lock(mutex_);
}

std::int64_t Session::now() const { return options_.clock(); }

void Session::emit(SessionEvent event) {
    std::lock_guard g(log_mutex_);
    SessionLogRecord record{seq_ + 1, now(), std::move(event)};
    ++seq_;
    if (sink_) {
        sink_(record);
    }
}

void Session::commit(SessionEvent event) {
    auto lk = lock();
    agent::apply(state_, event);
    emit(std::move(event));
}

void Session::append_turn(Role role, std::string text, json payload) {
    commit(TurnAppended{Turn{role, std::move(text), std::move(payload), now()}});
}

void Session::append_system_turn() {
    append_turn(Role::System, std::string(system_instructions()),
                {{"instructions_version", system_instructions_version()}});
}

void Session::record_frame(const std::string& frame, const protocol::BoardResponse& response) {
    emit(DeviceCommand{strip_lf(frame), response});
}

void Session::bind_device(std::shared_ptr<device::Device> device) {
    auto lk = lock();
    if (device_) {
        device_->set_frame_observer({});
    }
    device_ = std::move(device);
    if (device_) {
        device_->set_frame_observer(
            [this](const std::string& frame, const protocol::BoardResponse& response) {
                record_frame(frame, response);
            });
    }
}

void Session::unbind_device() { bind_device(nullptr); }

bool Session::has_device() const {
    auto lk = lock();
    return device_ != nullptr;
}

device::Device& Session::device() {
    auto lk = lock();
    if (!device_ || !device_->is_open()) {
        fail(ErrorCode::DeviceGone, "no board attached to session " + id());
    }
    return *device_;
}

void Session::set_mode(Mode mode) {
    auto lk = lock();
    commit(ModeChanged{mode});
    append_turn(Role::Developer,
                "Mode changed to " + std::string(mode == Mode::Ask ? "Ask" : "Test") + ".",
                {{"mode", to_string(mode)}});
}

void Session::sync_schematic(netlist::Netlist netlist) {
    auto lk = lock();
    const std::string yaml = netlist::emit_yaml(netlist::canonicalize(std::move(netlist)));
    const std::int64_t revision = state_.schematic_revision + 1;
    commit(SchematicSynced{yaml, revision});
    append_turn(Role::Developer,
                "Schematic updated (revision " + std::to_string(revision) + "):\n" + yaml,
                {{"schematic_revision", revision}});
}

void Session::select_context(std::span<const std::string> ids) {
    auto lk = lock();
    if (!state_.schematic) {
        fail(ErrorCode::NoSchematic, "no schematic synced yet");
    }
    auto entries = netlist::extract_component_context(state_.schematic->netlist, ids);
    json payload = {{"context", entries}};
    std::string text = entries.empty()
                           ? std::string("Component selection cleared.")
                           : "Selected components:\n" + payload["context"].dump(2);
    commit(ContextSelected{std::move(entries)});
    append_turn(Role::Developer, std::move(text), std::move(payload));
}

AgentOutcome Session::submit_query(std::string_view text) {
    if (blank(text)) {
        fail(ErrorCode::EmptyQuery, "query text is empty");
    }
    auto lk = lock();
    return run_query(text);
}

void Session::fail_query(const std::string& reason) {
    commit(StatusChanged{{StatusEvent::Kind::Failed, reason}});
    fail(ErrorCode::AgentUnavailable, reason);
}

AgentOutcome Session::run_query(std::string_view text) {
    auto lk = lock();
    commit(StatusChanged{{StatusEvent::Kind::Thinking, {}}});
    append_turn(Role::User, std::string(text));
    if (!options_.agent) {
        fail_query("no agent configured");
    }

    AgentOutcome outcome;
    const std::vector<ToolSchema> tools = tools_for_mode(state_.mode);
    for (int round = 0; round < options_.max_tool_rounds; ++round) {
        AgentRequest request{state_.turns, tools, state_.mode,
                             static_cast<std::size_t>(state_.completed_queries), round};
        AgentReply reply;
        try {
            reply = options_.agent->respond(request);
        } catch (const std::exception& e) {
            fail_query(e.what());
        }

        for (std::size_t i = 0; i < reply.calls.size(); ++i) {
            if (reply.calls[i].id.empty()) {
                reply.calls[i].id = id() + "-c" + std::to_string(state_.turns.size()) + "-" +
                                    std::to_string(i + 1);
            }
        }
        json payload;
        if (!reply.calls.empty()) {
            payload = {{"calls", reply.calls}};
        }
        append_turn(Role::Assistant, reply.text, std::move(payload));

        for (const auto& call : reply.calls) {
            json tool_payload = {{"call_id", call.id}, {"name", call.name}, {"arguments", call.arguments}};
            try {
                json action;
                json result = dispatch_locked(call, &action);
                tool_payload["ok"] = true;
                tool_payload["result"] = result;
                append_turn(Role::Tool, result.dump(), std::move(tool_payload));
                if (!action.is_null()) {
                    outcome.actions.push_back(std::move(action));
                }
            } catch (const Error& e) {
                tool_payload["ok"] = false;
                tool_payload["error"] = e.name();
                tool_payload["message"] = e.what();
                append_turn(Role::Tool, std::string(e.name()) + ": " + e.what(),
                            std::move(tool_payload));
            }
        }

        outcome.text = reply.text;
        if (!reply.text.empty() || reply.calls.empty()) {
            break;
        }
    }
    commit(StatusChanged{{StatusEvent::Kind::Responded, {}}});
    return outcome;
}

json Session::dispatch_tool_call(const ToolCall& call, json* action) {
    auto lk = lock();
    return dispatch_locked(call, action);
}

json Session::dispatch_locked(const ToolCall& call, json* action) {
    const ToolSchema* tool = find_tool(call.name);
    if (!tool) {
        fail(ErrorCode::UnknownTool, "no tool named '" + call.name + "'");
    }
    if (!tool->available_in(state_.mode)) {
        const bool ask = state_.mode == Mode::Ask;
        fail(ErrorCode::ModeViolation, tool->name + " is only available in " + (ask ? "Test" : "Ask") +
                                           " mode; the session is in " + (ask ? "Ask" : "Test") + " mode");
    }
    const ToolArgs args = parse_tool_args(*tool, call.arguments);

    json result;
    json effect;
    if (const auto* h = std::get_if<HighlightRowsArgs>(&args)) {
        highlight_rows(h->rows, h->pattern);
        result = {{"rows", h->rows}, {"pattern", protocol::to_string(h->pattern)}};
        effect = {{"type", "highlight"}, {"rows", h->rows}, {"pattern", protocol::to_string(h->pattern)}};
    } else if (std::holds_alternative<GetSchematicArgs>(args)) {
        if (!state_.schematic) {
            fail(ErrorCode::NoSchematic, "no schematic synced yet");
        }
        result = {{"revision", state_.schematic_revision}, {"yaml", state_.schematic->yaml}};
    } else {
        if (tool->creates_test() && state_.mode == Mode::Test) {
            commit(StatusChanged{{StatusEvent::Kind::AddingTests, {}}});
        }
        auto artifact = create_from_tool_call(*this, args);
        if (const auto* test = std::get_if<TestItem>(&artifact)) {
            result = {{"test", *test}};
            effect = {{"type", "test_created"}, {"test_id", test->id}, {"group_id", test->group_id}};
        } else {
            const auto& s = std::get<Suggestion>(artifact);
            result = {{"suggestion", s}};
            effect = {{"type", "suggestion_created"}, {"suggestion_id", s.id}, {"rows", s.rows()}};
        }
    }
    if (action && !effect.is_null()) {
        effect["tool"] = tool->name;
        effect["call_id"] = call.id;
        *action = std::move(effect);
    }
    return result;
}

void Session::highlight_rows(std::span<const int> rows, protocol::LedPattern pattern) {
    for (int r : rows) {
        if (r < protocol::kMinRow || r > protocol::kMaxRow) {
            fail(ErrorCode::ParamOutOfBounds, "row " + std::to_string(r) + " outside 1..50");
        }
    }
    const std::set<int> unique(rows.begin(), rows.end());
    auto lk = lock();
    if (unique.empty()) {
        return;
    }
    auto& dev = device();
    for (int r : unique) {
        dev.execute(protocol::Led{r, pattern});
    }
}

std::vector<int> Session::highlight_component(std::string_view component_id) {
    auto lk = lock();
    if (!state_.schematic) {
        fail(ErrorCode::NoSchematic, "no schematic synced yet");
    }
    std::vector<int> rows;
    for (const auto& r : netlist::rows_for_component(state_.schematic->netlist, component_id)) {
        rows.push_back(r.value());
    }
    highlight_rows(rows, protocol::LedPattern::Blink);
    return rows;
}

}  // namespace rowlight::agent
