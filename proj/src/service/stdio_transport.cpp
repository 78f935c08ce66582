#include <mutex>

#include "rowlight/transports.hpp"

namespace rowlight::service {

using nlohmann::json;

void serve_stdio(Service& service, std::istream& in, std::ostream& out) {
    auto out_mutex = std::make_shared<std::mutex>();
    auto open = std::make_shared<bool>(true);
    auto write = [out_mutex, open, &out](const json& j) {
        std::lock_guard g(*out_mutex);
        if (*open) {
            out << j.dump() << '\n' << std::flush;
        }
    };
    service.add_listener([write](const std::string& session_id, const agent::SessionLogRecord& r) {
        write({{"event", agent::event_type(r.event)},
               {"session", session_id},
               {"seq", r.seq},
               {"data", agent::event_data(r.event)}});
    });

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const json req = json::parse(line, nullptr, false);
        if (req.is_discarded() || !req.is_object()) {
            write({{"id", nullptr},
                   {"status", 400},
                   {"body", error_body(ErrorCode::InvalidArgument, "request line is not a JSON object")}});
            continue;
        }
        const json id = req.value("id", json());
        ApiRequest api{req.value("method", "GET"), req.value("path", ""), ""};
        if (req.contains("body")) {
            api.body = req["body"].is_string() ? req["body"].get<std::string>() : req["body"].dump();
        }
        const ApiResponse res = service.handle(api);
        json body;
        if (res.content_type == "application/json") {
            body = json::parse(res.body, nullptr, false);
        } else {
            body = res.body;
        }
        write({{"id", id}, {"status", res.status}, {"body", body}});
    }
    std::lock_guard g(*out_mutex);
    *open = false;
}

}  // namespace rowlight::service
