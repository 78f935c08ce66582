#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rowlight/agent_client.hpp"
#include "rowlight/device.hpp"
#include "rowlight/session_state.hpp"

namespace rowlight::agent {

struct SessionOptions {
    std::string id;
    std::shared_ptr<AgentClient> agent;    // null: queries fail with AgentUnavailable
    std::function<std::int64_t()> clock;   // ms since epoch; defaults to the system clock
    int max_tool_rounds = 4;
    int sample_interval_ms = 10;
};

// Receives every record in seq order, including device frames.
using RecordSink = std::function<void(const SessionLogRecord&)>;

struct AgentOutcome {
    std::string text;
    std::vector<nlohmann::json> actions;  // one per executed tool call
};

void to_json(nlohmann::json& j, const AgentOutcome& outcome);

/// Conversation, mode, schematic context and artifacts of one maker session.
/// Every change is a SessionEvent: applied to the state and handed to the sink
/// under one lock, so the sink sees exactly the sequence replay will see.
class Session {
public:
    // Fresh session: records SessionOpened and the System turn.
    static std::shared_ptr<Session> create(SessionOptions options, RecordSink sink = {});
    // Continues a replayed session; new records start at last_seq + 1. A query
    // cut short by a restart is closed with a Failed status.
    static std::shared_ptr<Session> resume(SessionOptions options, SessionState state,
                                           std::int64_t last_seq, RecordSink sink = {});

    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const { return options_.id; }
    SessionState snapshot() const;
    std::int64_t last_seq() const;

    void set_mode(Mode mode);
    void sync_schematic(netlist::Netlist netlist);
    void select_context(std::span<const std::string> ids);  // UnknownComponent, NoSchematic

    // EmptyQuery; AgentUnavailable after recording the Failed status.
    AgentOutcome submit_query(std::string_view text);

    // Runs one tool call outside of a query. Throws UnknownTool, ModeViolation,
    // InvalidParams, ParamOutOfBounds, NoSchematic and device errors; returns
    // the tool result. `action` receives the effect description when non-null.
    nlohmann::json dispatch_tool_call(const ToolCall& call, nlohmann::json* action = nullptr);

    // Blinks the rows of a component in the current snapshot; returns them.
    std::vector<int> highlight_component(std::string_view component_id);
    void highlight_rows(std::span<const int> rows, protocol::LedPattern pattern);

    // Frames sent through a bound device are logged as DeviceCommand records.
    void bind_device(std::shared_ptr<device::Device> device);
    void unbind_device();
    bool has_device() const;

    // ---- used by the test engine ----
    std::unique_lock<std::recursive_mutex> lock() const;
    const SessionState& state() const { return state_; }  // hold lock()
    void commit(SessionEvent event);
    void append_turn(Role role, std::string text, nlohmann::json payload = nullptr);
    device::Device& device();  // DeviceGone when unbound or closed
    int sample_interval_ms() const { return options_.sample_interval_ms; }
    std::int64_t now() const;
    // Query cycle shared by submit_query and interpret.
    AgentOutcome run_query(std::string_view text);

private:
    Session(SessionOptions options, RecordSink sink);

    void emit(SessionEvent event);
    void append_system_turn();
    void record_frame(const std::string& frame, const protocol::BoardResponse& response);
    void fail_query(const std::string& reason);
    nlohmann::json dispatch_locked(const ToolCall& call, nlohmann::json* action);

    SessionOptions options_;
    RecordSink sink_;

    mutable std::recursive_mutex mutex_;
    SessionState state_;
    std::shared_ptr<device::Device> device_;

    mutable std::mutex log_mutex_;
    std::int64_t seq_ = 0;
};

}  // namespace rowlight::agent
