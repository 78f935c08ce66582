#include <httplib.h>

#include <cstdlib>

#include "rowlight/agent_client.hpp"
#include "rowlight/error.hpp"

namespace rowlight::agent {

using nlohmann::json;

namespace {

[[noreturn]] void unavailable(const std::string& what) { fail(ErrorCode::AgentUnavailable, what); }

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        fail(ErrorCode::ConfigInvalid, "agent endpoint '" + url + "' is not an http(s) URL");
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        fail(ErrorCode::ConfigInvalid, "agent endpoint scheme must be http or https");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

json message_for(const Turn& turn) {
    switch (turn.role) {
        case Role::System: return {{"role", "system"}, {"content", turn.text}};
        case Role::Developer: return {{"role", "developer"}, {"content", turn.text}};
        case Role::User: return {{"role", "user"}, {"content", turn.text}};
        case Role::Assistant: {
            json m = {{"role", "assistant"}};
            m["content"] = turn.text.empty() ? json(nullptr) : json(turn.text);
            if (turn.payload.is_object() && turn.payload.contains("calls")) {
                json calls = json::array();
                for (const auto& c : turn.payload.at("calls")) {
                    calls.push_back({{"id", c.at("id")},
                                     {"type", "function"},
                                     {"function",
                                      {{"name", c.at("name")}, {"arguments", c.at("arguments").dump()}}}});
                }
                m["tool_calls"] = calls;
            }
            return m;
        }
        case Role::Tool:
            if (turn.payload.is_object() && turn.payload.contains("call_id")) {
                return {{"role", "tool"},
                        {"tool_call_id", turn.payload.at("call_id")},
                        {"content", turn.text}};
            }
            // Results the user submitted are not answers to a model call.
            return {{"role", "developer"}, {"content", turn.text + "\n" + turn.payload.dump()}};
    }
    return {};
}

}  // namespace

json build_chat_request(const AgentRequest& request, const std::string& model) {
    json messages = json::array();
    for (const auto& t : request.turns) {
        messages.push_back(message_for(t));
    }
    json body = {{"model", model}, {"messages", messages}};
    if (!request.tools.empty()) {
        json tools = json::array();
        for (const auto& t : request.tools) {
            tools.push_back({{"type", "function"},
                             {"function",
                              {{"name", t.name},
                               {"description", t.description},
                               {"parameters", t.parameters}}}});
        }
        body["tools"] = tools;
    }
    return body;
}

AgentReply parse_chat_response(const json& body) {
    if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() ||
        body["choices"].empty()) {
        unavailable("agent response has no choices");
    }
    const json& message = body["choices"][0].value("message", json::object());
    AgentReply reply;
    if (message.contains("content") && message["content"].is_string()) {
        reply.text = message["content"].get<std::string>();
    }
    if (message.contains("tool_calls") && message["tool_calls"].is_array()) {
        for (const auto& c : message["tool_calls"]) {
            const json fn = c.value("function", json::object());
            ToolCall call;
            call.id = c.value("id", "");
            call.name = fn.value("name", "");
            const std::string raw = fn.value("arguments", "{}");
            call.arguments = json::parse(raw, nullptr, false);
            if (call.arguments.is_discarded()) {
                // Kept so that argument validation reports it back to the model.
                call.arguments = {{"unparsed_arguments", raw}};
            }
            reply.calls.push_back(std::move(call));
        }
    }
    return reply;
}

RemoteAgent::RemoteAgent(RemoteAgentConfig config) : config_(std::move(config)) {
    split_url(config_.endpoint);
    if (config_.model.empty()) {
        fail(ErrorCode::ConfigInvalid, "remote agent needs a model name");
    }
}

AgentReply RemoteAgent::respond(const AgentRequest& request) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
        unavailable("credential variable " + config_.api_key_env + " is not set");
    }
    const Url url = split_url(config_.endpoint);
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    client.set_write_timeout(config_.timeout_s, 0);

    const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
    const std::string body = build_chat_request(request, config_.model).dump();
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
        unavailable("agent endpoint unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        unavailable("agent endpoint answered HTTP " + std::to_string(res->status) + ": " +
                    res->body.substr(0, 200));
    }
    const json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
        unavailable("agent endpoint returned invalid JSON");
    }
    return parse_chat_response(parsed);
}

}  // namespace rowlight::agent
