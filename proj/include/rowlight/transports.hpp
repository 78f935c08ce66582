#pragma once

#include <atomic>
#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "rowlight/service.hpp"

namespace httplib {
class Server;
}

namespace rowlight::service {

/// HTTP/JSON front end. GET /session/{id}/events streams server-sent events;
/// the Last-Event-ID header (or ?after=<seq>) resumes after a given record.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    // Returns the bound port; port 0 picks a free one. IoError on failure.
    int bind(const std::string& host, int port);
    void serve();  // blocks until stop()
    void stop();

private:
    Service& service_;
    std::unique_ptr<httplib::Server> server_;
    std::atomic<bool> stopping_{false};
};

/// Line-oriented transport over a pair of streams.
///
///   in:  {"id":1,"method":"POST","path":"/session/s1/query","body":{"text":"..."}}
///   out: {"id":1,"status":200,"body":{...}}
///        {"event":"StatusEvent","session":"s1","seq":7,"data":{...}}
///
/// A string body is passed through as-is (netlist XML); anything else is
/// serialized as JSON. Returns when `in` reaches EOF.
void serve_stdio(Service& service, std::istream& in, std::ostream& out);

}  // namespace rowlight::service
