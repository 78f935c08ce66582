#include <httplib.h>

#include "rowlight/transports.hpp"

namespace rowlight::service {

namespace {

std::int64_t resume_point(const httplib::Request& req) {
    std::string v;
    if (req.has_header("Last-Event-ID")) {
        v = req.get_header_value("Last-Event-ID");
    } else if (req.has_param("after")) {
        v = req.get_param_value("after");
    }
    try {
        return v.empty() ? 0 : std::stoll(v);
    } catch (const std::exception&) {
        return 0;
    }
}

}  // namespace

HttpServer::HttpServer(Service& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        ApiResponse r = service_.handle({req.method, req.path, req.body});
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };

    server_->Get(R"(/session/([^/]+)/events)", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
        std::shared_ptr<EventHub> hub;
        try {
            hub = service_.hub(req.matches[1]);
        } catch (const Error& e) {
            res.status = http_status_for(e.code());
            res.set_content(error_body(e.code(), e.what()).dump(), "application/json");
            return;
        }
        auto last = std::make_shared<std::int64_t>(resume_point(req));
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, hub, last](std::size_t, httplib::DataSink& sink) {
                if (stopping_ || hub->closed()) {
                    sink.done();
                    return true;
                }
                auto events = hub->events_after(*last, std::chrono::milliseconds(500));
                if (events.empty()) {
                    const std::string ping = ": keep-alive\n\n";
                    return sink.write(ping.data(), ping.size());
                }
                for (const auto& e : events) {
                    const std::string block = format_sse(e);
                    if (!sink.write(block.data(), block.size())) {
                        return false;
                    }
                    *last = e.seq;
                }
                return true;
            });
    });
    server_->Get(".*", forward);
    server_->Post(".*", forward);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) {
        fail(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
}

void HttpServer::serve() { server_->listen_after_bind(); }

void HttpServer::stop() {
    stopping_ = true;
    if (server_->is_running()) {
        server_->stop();
    }
}

}  // namespace rowlight::service
