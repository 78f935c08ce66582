#include "rowlight/service.hpp"

#include <algorithm>
#include <cctype>

#include "rowlight/serial_device.hpp"
#include "rowlight/sim_device.hpp"
#include "rowlight/test_engine.hpp"

namespace rowlight::service {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(std::string_view path) {
    if (auto q = path.find('?'); q != std::string_view::npos) {
        path = path.substr(0, q);
    }
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') {
            ++i;
        }
        std::size_t j = i;
        while (j < path.size() && path[j] != '/') {
            ++j;
        }
        if (j > i) {
            parts.emplace_back(path.substr(i, j - i));
        }
        i = j;
    }
    return parts;
}

json body_json(const ApiRequest& req) {
    if (std::all_of(req.body.begin(), req.body.end(),
                    [](unsigned char c) { return std::isspace(c) != 0; })) {
        return json::object();
    }
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
    }
    return j;
}

std::string string_field(const json& body, const char* key) {
    if (!body.contains(key) || !body[key].is_string()) {
        fail(ErrorCode::InvalidArgument, std::string("body needs string '") + key + "'");
    }
    return body[key].get<std::string>();
}

std::vector<std::string> string_list(const json& body, const char* key) {
    if (!body.contains(key) || !body[key].is_array()) {
        fail(ErrorCode::InvalidArgument, std::string("body needs array '") + key + "'");
    }
    std::vector<std::string> out;
    for (const auto& v : body[key]) {
        if (!v.is_string()) {
            fail(ErrorCode::InvalidArgument, std::string("'") + key + "' must hold strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

ApiResponse ok(json body, int status = 200) { return {status, "application/json", body.dump()}; }

[[noreturn]] void not_found(const ApiRequest& req) {
    fail(ErrorCode::NotFound, "no route for " + req.method + " " + req.path);
}

std::int64_t session_number(const std::string& id) {
    if (id.size() < 2 || id[0] != 's' ||
        !std::all_of(id.begin() + 1, id.end(), [](unsigned char c) { return std::isdigit(c) != 0; })) {
        return 0;
    }
    try {
        return std::stoll(id.substr(1));
    } catch (const std::out_of_range&) {
        return 0;
    }
}

}  // namespace

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedXml:
        case ErrorCode::SchemaViolation:
        case ErrorCode::DanglingReference:
        case ErrorCode::RowOutOfRange:
        case ErrorCode::UnknownComponent:
        case ErrorCode::YamlInvalid:
        case ErrorCode::MillivoltsOutOfRange:
        case ErrorCode::DutyOutOfRange:
        case ErrorCode::DurationOutOfRange:
        case ErrorCode::UnknownPin:
        case ErrorCode::InvalidArgument:
        case ErrorCode::ParamOutOfBounds:
        case ErrorCode::InvalidParams:
        case ErrorCode::UnknownTool:
        case ErrorCode::EmptyQuery:
        case ErrorCode::MissingObservation:
            return 400;
        case ErrorCode::UnknownTest:
        case ErrorCode::UnknownSuggestion:
        case ErrorCode::UnknownSession:
        case ErrorCode::NotFound:
            return 404;
        case ErrorCode::InvalidState:
        case ErrorCode::ModeViolation:
        case ErrorCode::NoSchematic:
        case ErrorCode::PinBusy:
            return 409;
        case ErrorCode::AgentUnavailable:
        case ErrorCode::FrameMalformed:
        case ErrorCode::ContractViolation:
            return 502;
        case ErrorCode::DeviceGone:
            return 503;
        case ErrorCode::InvalidFixture:
        case ErrorCode::LogCorrupt:
        case ErrorCode::ConfigInvalid:
        case ErrorCode::IoError:
            return 500;
    }
    return 500;
}

json error_body(ErrorCode code, const std::string& message) {
    return {{"error", error_name(code)}, {"message", message}};
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {
    if (!options_.log_dir) {
        return;
    }
    std::error_code ec;
    std::filesystem::create_directories(*options_.log_dir, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot create log directory " + options_.log_dir->string());
    }
    std::vector<std::filesystem::path> logs;
    for (const auto& entry : std::filesystem::directory_iterator(*options_.log_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            logs.push_back(entry.path());
        }
    }
    std::sort(logs.begin(), logs.end(), [](const auto& a, const auto& b) {
        return session_number(a.stem().string()) < session_number(b.stem().string());
    });

    std::shared_ptr<agent::Session> newest;
    for (const auto& path : logs) {
        const std::string id = path.stem().string();
        auto hub = std::make_shared<EventHub>();
        Replayed replayed = replay_file(path, [&](const agent::SessionLogRecord& r) { hub->publish(r); });
        if (replayed.torn_tail) {
            std::error_code trim;
            std::filesystem::resize_file(path, replayed.valid_bytes, trim);
            if (trim) {
                fail(ErrorCode::IoError, "cannot trim the torn tail of " + path.string());
            }
        }
        if (replayed.last_seq == 0) {
            // Died before the first record: the session was never announced.
            std::filesystem::remove(path);
            continue;
        }
        auto log = std::make_shared<LogWriter>(path);
        auto session = agent::Session::resume(session_options(id), std::move(replayed.state),
                                              replayed.last_seq, make_sink(id, hub, log));
        sessions_[id] = Entry{session, hub, log};
        next_id_ = std::max<std::int64_t>(next_id_, session_number(id) + 1);
        newest = session;
    }
    if (newest) {
        bind_device_to(newest);
    }
}

Service::~Service() {
    std::lock_guard g(mutex_);
    for (auto& [id, entry] : sessions_) {
        entry.session->unbind_device();
        entry.hub->close();
    }
}

agent::SessionOptions Service::session_options(const std::string& id) const {
    agent::SessionOptions o;
    o.id = id;
    o.agent = options_.agent;
    o.clock = options_.clock;
    o.max_tool_rounds = options_.max_tool_rounds;
    o.sample_interval_ms = options_.sample_interval_ms;
    return o;
}

agent::RecordSink Service::make_sink(const std::string& id, std::shared_ptr<EventHub> hub,
                                     std::shared_ptr<LogWriter> log) {
    return [this, id, hub, log](const agent::SessionLogRecord& record) {
        if (log) {
            log->append(record);
        }
        hub->publish(record);
        std::vector<RecordListener> listeners;
        {
            std::lock_guard g(listener_mutex_);
            listeners = listeners_;
        }
        for (const auto& l : listeners) {
            l(id, record);
        }
    };
}

void Service::add_listener(RecordListener listener) {
    std::lock_guard g(listener_mutex_);
    listeners_.push_back(std::move(listener));
}

void Service::bind_device_to(const std::shared_ptr<agent::Session>& session) {
    if (!options_.device) {
        return;
    }
    for (auto& [id, entry] : sessions_) {
        if (entry.session != session && entry.session->has_device()) {
            entry.session->unbind_device();
        }
    }
    session->bind_device(options_.device);
}

std::shared_ptr<agent::Session> Service::create_session() {
    std::lock_guard g(mutex_);
    const std::string id = "s" + std::to_string(next_id_++);
    auto hub = std::make_shared<EventHub>();
    std::shared_ptr<LogWriter> log;
    if (options_.log_dir) {
        log = std::make_shared<LogWriter>(*options_.log_dir / (id + ".jsonl"));
    }
    auto session = agent::Session::create(session_options(id), make_sink(id, hub, log));
    sessions_[id] = Entry{session, hub, log};
    bind_device_to(session);
    return session;
}

std::shared_ptr<agent::Session> Service::session(const std::string& id) const {
    std::lock_guard g(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        fail(ErrorCode::UnknownSession, "no session '" + id + "'");
    }
    return it->second.session;
}

std::shared_ptr<EventHub> Service::hub(const std::string& id) const {
    std::lock_guard g(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        fail(ErrorCode::UnknownSession, "no session '" + id + "'");
    }
    return it->second.hub;
}

std::vector<std::string> Service::session_ids() const {
    std::lock_guard g(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) {
        ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end(), [](const auto& a, const auto& b) {
        return session_number(a) < session_number(b);
    });
    return ids;
}

std::shared_ptr<agent::Session> Service::owner_of(const std::string& artifact_id) const {
    std::lock_guard g(mutex_);
    for (const auto& [id, entry] : sessions_) {
        if (artifact_id.size() > id.size() + 1 && artifact_id.compare(0, id.size(), id) == 0 &&
            artifact_id[id.size()] == '-') {
            return entry.session;
        }
    }
    return nullptr;
}

ApiResponse Service::handle(const ApiRequest& request) {
    try {
        return route(request);
    } catch (const Error& e) {
        return {http_status_for(e.code()), "application/json", error_body(e.code(), e.what()).dump()};
    } catch (const json::exception& e) {
        return {400, "application/json", error_body(ErrorCode::InvalidArgument, e.what()).dump()};
    } catch (const std::exception& e) {
        return {500, "application/json", error_body(ErrorCode::IoError, e.what()).dump()};
    }
}

ApiResponse Service::route(const ApiRequest& req) {
    const auto parts = split_path(req.path);
    const bool get = req.method == "GET";
    const bool post = req.method == "POST";
    if (parts.empty()) {
        not_found(req);
    }

    if (parts[0] == "sessions" && parts.size() == 1 && get) {
        return ok({{"sessions", session_ids()}});
    }

    if (parts[0] == "session") {
        if (parts.size() == 1 && post) {
            return ok({{"id", create_session()->id()}}, 201);
        }
        if (parts.size() != 3) {
            not_found(req);
        }
        auto s = session(parts[1]);
        const std::string& op = parts[2];
        if (get && op == "state") {
            return ok(agent::state_to_json(s->snapshot()));
        }
        if (!post) {
            not_found(req);
        }
        if (op == "schematic") {
            s->sync_schematic(netlist::parse_netlist_xml(req.body));
            const auto st = s->snapshot();
            return ok({{"revision", st.schematic_revision}, {"yaml", st.schematic->yaml}});
        }
        const json body = body_json(req);
        if (op == "query") {
            const std::string text = string_field(body, "text");
            auto lk = s->lock();
            if (body.contains("context")) {
                const auto ids = string_list(body, "context");
                s->select_context(ids);
            }
            return ok(s->submit_query(text));
        }
        if (op == "mode") {
            std::string m = string_field(body, "mode");
            std::transform(m.begin(), m.end(), m.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            auto mode = agent::mode_from_string(m);
            if (!mode) {
                fail(ErrorCode::InvalidArgument, "mode must be 'ask' or 'test'");
            }
            s->set_mode(*mode);
            return ok({{"mode", agent::to_string(*mode)}});
        }
        if (op == "context") {
            const auto ids = string_list(body, "ids");
            s->select_context(ids);
            return ok({{"selected_context", s->snapshot().selected_context}});
        }
        if (op == "highlight") {
            if (body.contains("component_id")) {
                return ok({{"rows", s->highlight_component(string_field(body, "component_id"))}});
            }
            if (!body.contains("rows") || !body["rows"].is_array()) {
                fail(ErrorCode::InvalidArgument, "body needs 'component_id' or 'rows'");
            }
            auto pattern = protocol::LedPattern::Blink;
            if (body.contains("pattern")) {
                auto p = protocol::led_pattern_from_string(string_field(body, "pattern"));
                if (!p) {
                    fail(ErrorCode::InvalidArgument, "unknown pattern");
                }
                pattern = *p;
            }
            const auto rows = body["rows"].get<std::vector<int>>();
            s->highlight_rows(rows, pattern);
            return ok({{"rows", rows}});
        }
        not_found(req);
    }

    if (parts[0] == "tests" && parts.size() >= 2 && parts.size() <= 3) {
        const std::string& id = parts[1];
        auto s = owner_of(id);
        if (!s) {
            fail(ErrorCode::UnknownTest, "no test '" + id + "'");
        }
        auto current = [&] {
            auto lk = s->lock();
            const auto* t = s->state().artifacts.find_test(id);
            if (!t) {
                fail(ErrorCode::UnknownTest, "no test '" + id + "'");
            }
            return *t;
        };
        if (get && parts.size() == 2) {
            return ok(current());
        }
        if (get && parts[2] == "series.csv") {
            const auto t = current();
            const auto* series = t.result ? std::get_if<device::TimeSeries>(&*t.result) : nullptr;
            if (!series) {
                fail(ErrorCode::NotFound, "test " + id + " has no series");
            }
            return {200, "text/csv", device::series_to_csv(*series)};
        }
        if (!post || parts.size() != 3) {
            not_found(req);
        }
        const std::string& op = parts[2];
        const json body = body_json(req);
        if (op == "highlight") {
            auto rows = agent::highlight_probes(*s, id);
            return ok({{"rows", rows}, {"test", current()}});
        }
        if (op == "run") {
            agent::run_test(*s, id);
            return ok({{"test", current()}});
        }
        if (op == "observe") {
            agent::record_observation(*s, id, string_field(body, "text"));
            return ok({{"test", current()}});
        }
        if (op == "submit") {
            std::optional<std::string> observation;
            if (body.contains("observation")) {
                observation = string_field(body, "observation");
            }
            const auto verdict = agent::submit_result(*s, id, observation);
            return ok({{"verdict", agent::to_string(verdict)}, {"test", current()}});
        }
        if (op == "interpret") {
            const auto text = agent::interpret(*s, id);
            return ok({{"interpretation", text}, {"test", current()}});
        }
        not_found(req);
    }

    if (parts[0] == "suggestions" && parts.size() == 3 && post) {
        const std::string& id = parts[1];
        auto s = owner_of(id);
        if (!s) {
            fail(ErrorCode::UnknownSuggestion, "no suggestion '" + id + "'");
        }
        auto current = [&] {
            auto lk = s->lock();
            return *s->state().artifacts.find_suggestion(id);
        };
        if (parts[2] == "highlight") {
            auto rows = agent::highlight_suggestion(*s, id);
            return ok({{"rows", rows}, {"suggestion", current()}});
        }
        if (parts[2] == "complete") {
            agent::complete_suggestion(*s, id);
            return ok({{"suggestion", current()}});
        }
    }

    not_found(req);
}

ServiceOptions options_from_config(const Config& config) {
    ServiceOptions o;
    if (const auto* sim = std::get_if<SimBackend>(&config.device)) {
        auto file = device::load_fixture_file(sim->fixture.string());
        o.device = device::open_sim(std::move(file.fixture), file.options);
    } else {
        const auto& serial = std::get<SerialBackend>(config.device);
        std::unique_ptr<device::ByteStream> stream;
        if (serial.endpoint.find(':') != std::string::npos) {
            stream = device::open_endpoint(serial.endpoint);
        } else {
            stream = device::open_serial_port(serial.endpoint, serial.baud);
        }
        o.device = std::make_shared<device::SerialDevice>(
            std::move(stream),
            device::SerialOptions{std::chrono::milliseconds(serial.response_timeout_ms)});
    }
    if (const auto* tape = std::get_if<TapeBackend>(&config.agent)) {
        o.agent = std::make_shared<agent::ScriptedAgent>(agent::load_tape_file(tape->tape));
    } else {
        o.agent = std::make_shared<agent::RemoteAgent>(std::get<RemoteBackend>(config.agent).remote);
    }
    o.log_dir = config.log_dir;
    o.sample_interval_ms = config.sample_interval_ms;
    o.max_tool_rounds = config.max_tool_rounds;
    return o;
}

}  // namespace rowlight::service
