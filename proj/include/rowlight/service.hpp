#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rowlight/config.hpp"
#include "rowlight/error.hpp"
#include "rowlight/session.hpp"
#include "rowlight/session_log.hpp"

namespace rowlight::service {

struct ApiRequest {
    std::string method;  // GET, POST
    std::string path;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// Every error code maps to exactly one status.
int http_status_for(ErrorCode code);
nlohmann::json error_body(ErrorCode code, const std::string& message);

using RecordListener =
    std::function<void(const std::string& session_id, const agent::SessionLogRecord& record)>;

struct ServiceOptions {
    std::shared_ptr<device::Device> device;     // bound to the newest session
    std::shared_ptr<agent::AgentClient> agent;  // shared by all sessions
    std::optional<std::filesystem::path> log_dir;
    std::function<std::int64_t()> clock;
    int sample_interval_ms = 10;
    int max_tool_rounds = 4;
};

/// Session registry and request router shared by the HTTP and stdio transports.
///
///   POST /session                      -> {"id"}
///   GET  /sessions
///   GET  /session/{id}/state
///   POST /session/{id}/query           {text, context?}
///   POST /session/{id}/mode            {mode: ask|test}
///   POST /session/{id}/schematic       netlist XML
///   POST /session/{id}/context         {ids}
///   POST /session/{id}/highlight       {component_id} | {rows, pattern?}
///   GET  /tests/{id}  /tests/{id}/series.csv
///   POST /tests/{id}/highlight|run|observe|submit|interpret
///   POST /suggestions/{id}/highlight|complete
///
/// GET /session/{id}/events is streamed by the HTTP transport from hub().
class Service {
public:
    // Resumes every session log found in log_dir.
    explicit Service(ServiceOptions options);
    ~Service();

    ApiResponse handle(const ApiRequest& request);

    std::shared_ptr<agent::Session> create_session();
    std::shared_ptr<agent::Session> session(const std::string& id) const;  // UnknownSession
    std::shared_ptr<EventHub> hub(const std::string& id) const;             // UnknownSession
    std::vector<std::string> session_ids() const;

    void add_listener(RecordListener listener);

private:
    struct Entry {
        std::shared_ptr<agent::Session> session;
        std::shared_ptr<EventHub> hub;
        std::shared_ptr<LogWriter> log;
    };

    agent::SessionOptions session_options(const std::string& id) const;
    agent::RecordSink make_sink(const std::string& id, std::shared_ptr<EventHub> hub,
                                std::shared_ptr<LogWriter> log);
    void bind_device_to(const std::shared_ptr<agent::Session>& session);
    std::shared_ptr<agent::Session> owner_of(const std::string& artifact_id) const;
    ApiResponse route(const ApiRequest& request);

    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, Entry> sessions_;
    int next_id_ = 1;

    std::mutex listener_mutex_;
    std::vector<RecordListener> listeners_;
};

// Builds device and agent backends from a config.
ServiceOptions options_from_config(const Config& config);

}  // namespace rowlight::service
