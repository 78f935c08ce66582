// Config, session logs, event fan-out, request routing and both transports.
#include <doctest.h>
#include <httplib.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "expect_error.hpp"
#include "harness.hpp"
#include "oracles.hpp"
#include "rowlight/sim_device.hpp"
#include "rowlight/transports.hpp"

using namespace rowlight;
using namespace rowlight::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   ("rowlight-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::shared_ptr<device::SimDevice> powered_divider() {
    const auto file = device::load_fixture_file(harness::fixture_path("powered-divider.yaml"));
    return device::open_sim(file.fixture, file.options);
}

ServiceOptions options_for(const std::string& tape, std::optional<fs::path> log_dir,
                           std::shared_ptr<device::Device> dev = nullptr) {
    ServiceOptions o;
    o.device = dev ? dev : powered_divider();
    o.agent = std::make_shared<agent::ScriptedAgent>(agent::load_tape_file(harness::fixture_path("tapes/" + tape)));
    o.log_dir = std::move(log_dir);
    return o;
}

struct Reply {
    int status;
    json body;
};

Reply call(Service& svc, const std::string& method, const std::string& path, const std::string& body = "") {
    const ApiResponse r = svc.handle({method, path, body});
    json j = r.content_type == "application/json" ? json::parse(r.body) : json(r.body);
    return {r.status, j};
}

Reply post(Service& svc, const std::string& path, const json& body = json::object()) {
    return call(svc, "POST", path, body.dump());
}

std::string netlist_xml() { return oracle::read_text(harness::fixture_path("loveometer-min.xml")); }

// Sends the end-to-end scenario through the router and returns the test id.
std::string run_scenario(Service& svc, const std::string& sid) {
    REQUIRE(call(svc, "POST", "/session/" + sid + "/schematic", netlist_xml()).status == 200);
    REQUIRE(post(svc, "/session/" + sid + "/mode", {{"mode", "test"}}).status == 200);
    const Reply q = post(svc, "/session/" + sid + "/query", {{"text", "Please add a test for the divider."}});
    REQUIRE(q.status == 200);
    const std::string tid = q.body["actions"][0]["test_id"];
    REQUIRE(post(svc, "/tests/" + tid + "/highlight").status == 200);
    REQUIRE(post(svc, "/tests/" + tid + "/run").status == 200);
    REQUIRE(post(svc, "/tests/" + tid + "/submit").status == 200);
    REQUIRE(post(svc, "/tests/" + tid + "/interpret").status == 200);
    return tid;
}

}  // namespace

TEST_CASE("config: the sample file resolves paths next to itself") {
    const Config c = load_config(harness::fixture_path("sim-service.yaml"));
    const fs::path base = fs::path(harness::fixture_path("sim-service.yaml")).parent_path();
    CHECK(std::get<SimBackend>(c.device).fixture == base / "powered-divider.yaml");
    CHECK(std::get<TapeBackend>(c.agent).tape == base / "tapes/end-to-end.yaml");
    CHECK(c.bind == "127.0.0.1");
    CHECK(c.port == 8080);
    CHECK(c.log_dir == base / "../logs");
    CHECK(c.sample_interval_ms == 10);
    CHECK(c.max_tool_rounds == 4);
}

TEST_CASE("config: backends and bounds") {
    const fs::path base = "/cfg";
    const Config serial = parse_config_yaml(
        "device: {serial: {endpoint: /dev/ttyACM0, baud: 9600}}\n"
        "agent: {remote: {endpoint: 'https://api.example.com/v1/chat/completions', model: m, api_key_env: KEY}}\n"
        "log_dir: /var/log/rowlight\nsample_interval_ms: 5\nmax_tool_rounds: 2\n",
        base);
    CHECK(std::get<SerialBackend>(serial.device).endpoint == "/dev/ttyACM0");
    CHECK(std::get<SerialBackend>(serial.device).baud == 9600);
    CHECK(std::get<RemoteBackend>(serial.agent).remote.api_key_env == "KEY");
    CHECK(serial.log_dir == "/var/log/rowlight");
    CHECK(serial.sample_interval_ms == 5);
    CHECK(serial.max_tool_rounds == 2);
    const Config tcp = parse_config_yaml("device: {serial: localhost:5555}\nagent: {tape: t.yaml}\n", base);
    CHECK(std::get<SerialBackend>(tcp.device).endpoint == "localhost:5555");
    CHECK(tcp.log_dir == base / "logs");

    const char* bad[] = {
        "device: {sim: a.yaml}\n",
        "agent: {tape: t.yaml}\n",
        "device: {sim: a.yaml, serial: x}\nagent: {tape: t.yaml}\n",
        "device: {usb: a}\nagent: {tape: t.yaml}\n",
        "device: {sim: a.yaml}\nagent: {remote: {endpoint: 'http://x'}}\n",
        "device: {sim: a.yaml}\nagent: {tape: t.yaml}\nhttp: {port: 70000}\n",
        "device: {sim: a.yaml}\nagent: {tape: t.yaml}\nsample_interval_ms: 0\n",
        "device: {sim: a.yaml}\nagent: {tape: t.yaml}\nmax_tool_rounds: 0\n",
        "device: {sim: a.yaml}\nagent: {tape: t.yaml}\ncolour: blue\n",
        "device: {sim: a.yaml}\nagent: {tape: t.yaml}\nhttp: {port: eighty}\n",
        "- just\n- a list\n",
        "device: [\n",
    };
    for (const char* yaml : bad) {
        CAPTURE(yaml);
        CHECK_ERROR_CODE(parse_config_yaml(yaml, base), ErrorCode::ConfigInvalid);
    }
    CHECK_ERROR_CODE(load_config("/nonexistent/rowlight.yaml"), ErrorCode::ConfigInvalid);
}

TEST_CASE("every error code maps to one documented status") {
    const std::map<ErrorCode, int> expected = {
        {ErrorCode::MalformedXml, 400},       {ErrorCode::SchemaViolation, 400},
        {ErrorCode::DanglingReference, 400},  {ErrorCode::RowOutOfRange, 400},
        {ErrorCode::UnknownComponent, 400},   {ErrorCode::YamlInvalid, 400},
        {ErrorCode::MillivoltsOutOfRange, 400}, {ErrorCode::DutyOutOfRange, 400},
        {ErrorCode::DurationOutOfRange, 400}, {ErrorCode::UnknownPin, 400},
        {ErrorCode::InvalidArgument, 400},    {ErrorCode::ParamOutOfBounds, 400},
        {ErrorCode::InvalidParams, 400},      {ErrorCode::UnknownTool, 400},
        {ErrorCode::EmptyQuery, 400},         {ErrorCode::MissingObservation, 400},
        {ErrorCode::UnknownTest, 404},        {ErrorCode::UnknownSuggestion, 404},
        {ErrorCode::UnknownSession, 404},     {ErrorCode::NotFound, 404},
        {ErrorCode::InvalidState, 409},       {ErrorCode::ModeViolation, 409},
        {ErrorCode::NoSchematic, 409},        {ErrorCode::PinBusy, 409},
        {ErrorCode::AgentUnavailable, 502},   {ErrorCode::FrameMalformed, 502},
        {ErrorCode::ContractViolation, 502},  {ErrorCode::DeviceGone, 503},
        {ErrorCode::InvalidFixture, 500},     {ErrorCode::LogCorrupt, 500},
        {ErrorCode::ConfigInvalid, 500},      {ErrorCode::IoError, 500},
    };
    CHECK(all_error_codes().size() == expected.size());
    for (auto code : all_error_codes()) {
        CAPTURE(error_name(code));
        REQUIRE(expected.count(code) == 1);
        CHECK(http_status_for(code) == expected.at(code));
        const json body = error_body(code, "why");
        CHECK(body == json{{"error", error_name(code)}, {"message", "why"}});
    }
}

TEST_CASE("session log: write, replay, gaps and torn tails") {
    const fs::path dir = fresh_dir("log");
    harness::Rig rig("end-to-end.yaml");
    rig.session->set_mode(agent::Mode::Test);
    rig.session->submit_query("Please add a test for the divider.");
    {
        LogWriter w(dir / "s1.jsonl");
        for (const auto& r : *rig.records) {
            w.append(r);
        }
    }
    std::vector<std::int64_t> seen;
    const Replayed back = replay_file(dir / "s1.jsonl", [&](const agent::SessionLogRecord& r) { seen.push_back(r.seq); });
    CHECK(back.state == rig.session->snapshot());
    CHECK(back.last_seq == static_cast<std::int64_t>(rig.records->size()));
    CHECK(seen.size() == rig.records->size());
    CHECK_FALSE(back.torn_tail);
    CHECK(back.valid_bytes == fs::file_size(dir / "s1.jsonl"));

    const std::string text = oracle::read_text((dir / "s1.jsonl").string());
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
        lines.push_back(l);
        CHECK(json::parse(l).contains("seq"));
    }

    std::istringstream empty("");
    CHECK(replay_stream(empty).last_seq == 0);

    std::istringstream gap(lines[0] + "\n" + lines[2] + "\n");
    CHECK_ERROR_CODE(replay_stream(gap), ErrorCode::LogCorrupt);
    std::istringstream late(lines[1] + "\n");
    CHECK_ERROR_CODE(replay_stream(late), ErrorCode::LogCorrupt);
    std::istringstream junk(lines[0] + "\nnot json\n");
    CHECK_ERROR_CODE(replay_stream(junk), ErrorCode::LogCorrupt);

    std::istringstream torn(lines[0] + "\n" + lines[1] + "\n" + lines[2].substr(0, lines[2].size() / 2));
    const Replayed partial = replay_stream(torn);
    CHECK(partial.torn_tail);
    CHECK(partial.last_seq == 2);
    CHECK(partial.valid_bytes == lines[0].size() + lines[1].size() + 2);

    // An intact record without its LF is not yet committed either.
    std::istringstream unterminated(lines[0] + "\n" + lines[1]);
    CHECK(replay_stream(unterminated).last_seq == 1);

    CHECK_ERROR_CODE(replay_file(dir / "missing.jsonl"), ErrorCode::IoError);
    fs::remove_all(dir);
}

TEST_CASE("server-sent event framing") {
    CHECK(format_sse({7, "StatusEvent", R"({"status":"Thinking"})"}) ==
          "id: 7\nevent: StatusEvent\ndata: {\"status\":\"Thinking\"}\n\n");
}

TEST_CASE("event hub hands out records in order") {
    EventHub hub(3);
    const auto t0 = std::chrono::steady_clock::now();
    CHECK(hub.events_after(0, std::chrono::milliseconds(30)).empty());
    CHECK(std::chrono::steady_clock::now() - t0 >= std::chrono::milliseconds(25));

    for (int i = 1; i <= 5; ++i) {
        hub.publish({i, 0, agent::ModeChanged{agent::Mode::Test}});
    }
    auto events = hub.events_after(0, std::chrono::milliseconds(0));
    REQUIRE(events.size() == 3);  // history limit
    CHECK(events[0].seq == 3);
    CHECK(events[2].seq == 5);
    CHECK(events[0].type == "ModeChanged");
    CHECK(json::parse(events[0].data) == json{{"mode", "test"}});
    CHECK(hub.events_after(4, std::chrono::milliseconds(0)).size() == 1);

    std::thread later([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        hub.publish({6, 0, agent::ModeChanged{agent::Mode::Ask}});
    });
    events = hub.events_after(5, std::chrono::seconds(5));
    later.join();
    REQUIRE(events.size() == 1);
    CHECK(events[0].seq == 6);

    hub.close();
    CHECK(hub.closed());
    CHECK(hub.events_after(6, std::chrono::seconds(5)).empty());
}

TEST_CASE("router: the end-to-end scenario over the API") {
    Service svc(options_for("end-to-end.yaml", std::nullopt));
    const Reply created = post(svc, "/session");
    CHECK(created.status == 201);
    CHECK(created.body["id"] == "s1");
    CHECK(call(svc, "GET", "/sessions").body == json{{"sessions", {"s1"}}});

    const Reply schematic = call(svc, "POST", "/session/s1/schematic", netlist_xml());
    CHECK(schematic.status == 200);
    CHECK(schematic.body["revision"] == 1);
    CHECK(schematic.body["yaml"] == oracle::read_text(harness::fixture_path("loveometer-min.yaml")));

    CHECK(post(svc, "/session/s1/context", {{"ids", {"LED1"}}}).body["selected_context"][0]["id"] == "LED1");
    CHECK(post(svc, "/session/s1/highlight", {{"component_id", "VS1"}}).body["rows"] == json{4, 7});
    CHECK(post(svc, "/session/s1/highlight", {{"rows", {3}}, {"pattern", "on"}}).body["rows"] == json{3});
    CHECK(post(svc, "/session/s1/mode", {{"mode", "Test"}}).body["mode"] == "test");

    const Reply q = post(svc, "/session/s1/query", {{"text", "Please add a test for the divider."}});
    CHECK(q.status == 200);
    const std::string tid = q.body["actions"][0]["test_id"];
    CHECK(tid == "s1-t1");

    CHECK(call(svc, "GET", "/tests/s1-t1").body["state"] == "Created");
    CHECK(post(svc, "/tests/s1-t1/submit").status == 409);
    CHECK(post(svc, "/tests/s1-t1/highlight").body["rows"] == json{12});
    const Reply run = post(svc, "/tests/s1-t1/run");
    CHECK(run.status == 200);
    CHECK(run.body["test"]["state"] == "ResultCaptured");
    CHECK(run.body["test"]["result"]["value_mv"] == 2500);
    CHECK(call(svc, "GET", "/tests/s1-t1/series.csv").status == 404);
    const Reply submit = post(svc, "/tests/s1-t1/submit");
    CHECK(submit.body["verdict"] == "Pass");
    const Reply interp = post(svc, "/tests/s1-t1/interpret");
    CHECK(interp.body["interpretation"].get<std::string>().find("2500 mV") != std::string::npos);
    CHECK(interp.body["test"]["state"] == "Interpreted");

    const Reply state = call(svc, "GET", "/session/s1/state");
    CHECK(state.status == 200);
    CHECK(state.body["mode"] == "test");
    CHECK(state.body["pending_artifacts"].empty());
    CHECK(state.body["completed_queries"] == 2);
}

TEST_CASE("router: errors carry the mapped status") {
    Service svc(options_for("ask-highlight.yaml", std::nullopt));
    post(svc, "/session");
    auto expect = [&](Reply r, int status, const char* code) {
        CHECK(r.status == status);
        CHECK(r.body["error"] == code);
        CHECK(r.body["message"].is_string());
    };
    expect(call(svc, "GET", "/session/s9/state"), 404, "UnknownSession");
    expect(call(svc, "GET", "/nowhere"), 404, "NotFound");
    expect(call(svc, "GET", "/"), 404, "NotFound");
    expect(call(svc, "DELETE", "/session/s1/state"), 404, "NotFound");
    expect(call(svc, "POST", "/session/s1/query", "{not json"), 400, "InvalidArgument");
    expect(post(svc, "/session/s1/query", {{"text", 3}}), 400, "InvalidArgument");
    expect(post(svc, "/session/s1/query", {{"text", "  "}}), 400, "EmptyQuery");
    expect(post(svc, "/session/s1/mode", {{"mode", "debug"}}), 400, "InvalidArgument");
    expect(call(svc, "POST", "/session/s1/schematic", "<netlist><component"), 400, "MalformedXml");
    expect(call(svc, "POST", "/session/s1/schematic", "<circuit/>"), 400, "SchemaViolation");
    expect(post(svc, "/session/s1/context", {{"ids", {"LED1"}}}), 409, "NoSchematic");
    expect(post(svc, "/session/s1/highlight", {{"rows", {51}}}), 400, "ParamOutOfBounds");
    expect(post(svc, "/session/s1/highlight", json::object()), 400, "InvalidArgument");
    expect(post(svc, "/session/s1/highlight", {{"rows", {1}}, {"pattern", "strobe"}}), 400, "InvalidArgument");
    expect(post(svc, "/tests/s1-t1/run"), 404, "UnknownTest");
    expect(post(svc, "/tests/zz/run"), 404, "UnknownTest");
    expect(post(svc, "/suggestions/s1-sg1/complete"), 404, "UnknownSuggestion");
    post(svc, "/session/s1/query", {{"text", "one"}});
    expect(post(svc, "/session/s1/query", {{"text", "two"}}), 502, "AgentUnavailable");

    // A session created later takes the board; the earlier one loses it.
    post(svc, "/session");
    expect(post(svc, "/session/s1/highlight", {{"rows", {1}}}), 503, "DeviceGone");
    CHECK(post(svc, "/session/s2/highlight", {{"rows", {1}}}).status == 200);
}

TEST_CASE("router: signal series as CSV and suggestions") {
    auto sim = device::open_sim(device::load_fixture_file(harness::fixture_path("unity-divider.yaml")).fixture);
    Service svc(options_for("signal.yaml", std::nullopt, sim));
    post(svc, "/session");
    post(svc, "/session/s1/mode", {{"mode", "test"}});
    post(svc, "/session/s1/query", {{"text", "square wave please"}});
    CHECK(post(svc, "/tests/s1-t1/run").status == 200);
    const Reply csv = call(svc, "GET", "/tests/s1-t1/series.csv");
    CHECK(csv.status == 200);
    const std::string text = csv.body.get<std::string>();
    CHECK(text.rfind("t_ms,value_mv\n0,5000\n10,5000\n20,0\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 14);

    Service ask(options_for("adversarial.yaml", std::nullopt));
    post(ask, "/session");
    post(ask, "/session/s1/mode", {{"mode", "test"}});
    post(ask, "/session/s1/query", {{"text", "q0"}});  // tests in Test mode are fine
    post(ask, "/session/s1/mode", {{"mode", "ask"}});
    post(ask, "/session/s1/query", {{"text", "q1"}});
    const Reply st = call(ask, "GET", "/session/s1/state");
    REQUIRE(st.body["suggestions"].size() == 2);
    CHECK(post(ask, "/suggestions/s1-sg1/highlight").body["rows"] == json{4, 9});
    CHECK(post(ask, "/suggestions/s1-sg1/complete").body["suggestion"]["state"] == "Completed");
    CHECK(post(ask, "/suggestions/s1-sg1/complete").status == 409);
}

TEST_CASE("restart: sessions come back from their logs") {
    const fs::path dir = fresh_dir("restart");
    auto sim = powered_divider();
    json before;
    {
        Service svc(options_for("end-to-end.yaml", dir, sim));
        post(svc, "/session");
        post(svc, "/session");
        run_scenario(svc, "s2");
        before = call(svc, "GET", "/session/s2/state").body;
    }
    CHECK(fs::exists(dir / "s1.jsonl"));
    CHECK(fs::exists(dir / "s2.jsonl"));

    Service again(options_for("end-to-end.yaml", dir, sim));
    CHECK(again.session_ids() == std::vector<std::string>{"s1", "s2"});
    CHECK(call(again, "GET", "/session/s2/state").body == before);
    CHECK(post(again, "/session").body["id"] == "s3");
    CHECK(replay_file(dir / "s3.jsonl").last_seq == 2);

    // A torn last line is cut off so new records append cleanly.
    {
        std::ofstream tail(dir / "s1.jsonl", std::ios::app | std::ios::binary);
        tail << R"({"seq":99,"at":0,"ty)";
    }
    Service third(options_for("end-to-end.yaml", dir, sim));
    CHECK(post(third, "/session/s1/mode", {{"mode", "test"}}).status == 200);
    CHECK(replay_file(dir / "s1.jsonl").state.mode == agent::Mode::Test);

    // Damage in the middle of a log is refused.
    {
        std::ofstream bad(dir / "s4.jsonl", std::ios::binary);
        bad << R"({"seq":2,"at":0,"type":"ModeChanged","data":{"mode":"test"}})" << "\n";
    }
    CHECK_ERROR_CODE(Service(options_for("end-to-end.yaml", dir, sim)), ErrorCode::LogCorrupt);
    fs::remove_all(dir);
}

TEST_CASE("HTTP transport with the event stream") {
    Service svc(options_for("ask-highlight.yaml", std::nullopt));
    HttpServer server(svc);
    const int port = server.bind("127.0.0.1", 0);
    std::thread serving([&] { server.serve(); });

    httplib::Client cli("127.0.0.1", port);
    cli.set_read_timeout(5, 0);
    for (int i = 0; i < 100 && !cli.Get("/sessions"); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    auto res = cli.Post("/session", "", "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    res = cli.Post("/session/s1/schematic", netlist_xml(), "application/xml");
    CHECK(res->status == 200);
    res = cli.Post("/session/s1/query", R"({"text":"Is my LED properly connected?"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["actions"][0]["rows"] == json{4, 7});
    res = cli.Get("/session/s9/state");
    CHECK(res->status == 404);
    CHECK(cli.Get("/session/s9/events")->status == 404);

    // Reads until `want` events arrived, then hangs up.
    auto read_events = [&](httplib::Headers headers, std::size_t want) {
        std::string buf;
        httplib::Client stream("127.0.0.1", port);
        stream.set_read_timeout(5, 0);
        stream.Get("/session/s1/events", headers, [&](const char* data, std::size_t len) {
            buf.append(data, len);
            std::size_t n = 0;
            for (auto p = buf.find("event: "); p != std::string::npos; p = buf.find("event: ", p + 1)) {
                ++n;
            }
            return n < want;
        });
        return buf;
    };
    const std::string all = read_events({}, 5);
    CHECK(all.rfind("id: 1\nevent: SessionOpened\n", 0) == 0);
    CHECK(all.find("event: StatusEvent\ndata: {\"status\":\"Thinking\"") != std::string::npos);

    const std::string resumed = read_events({{"Last-Event-ID", "3"}}, 1);
    CHECK(resumed.rfind("id: 4\n", 0) == 0);

    server.stop();
    serving.join();
}

TEST_CASE("stdio transport answers requests and forwards events") {
    Service svc(options_for("ask-highlight.yaml", std::nullopt));
    std::istringstream in(
        R"({"id":1,"method":"POST","path":"/session"})" "\n"
        "\n"
        "garbage\n"
        R"({"id":2,"method":"POST","path":"/session/s1/mode","body":{"mode":"test"}})" "\n"
        R"({"id":"x","method":"POST","path":"/session/s1/schematic","body":"<netlist/>"})" "\n"
        R"({"id":4,"path":"/session/s1/state"})" "\n");
    std::ostringstream out;
    serve_stdio(svc, in, out);

    std::vector<json> lines;
    std::istringstream o(out.str());
    for (std::string l; std::getline(o, l);) {
        lines.push_back(json::parse(l));
    }
    std::vector<json> replies;
    std::vector<json> events;
    for (const auto& l : lines) {
        (l.contains("event") ? events : replies).push_back(l);
    }
    REQUIRE(replies.size() == 5);
    CHECK(replies[0] == json{{"id", 1}, {"status", 201}, {"body", {{"id", "s1"}}}});
    CHECK(replies[1]["id"].is_null());
    CHECK(replies[1]["status"] == 400);
    CHECK(replies[2]["body"]["mode"] == "test");
    CHECK(replies[3]["id"] == "x");
    CHECK(replies[3]["body"]["revision"] == 1);
    CHECK(replies[4]["body"]["mode"] == "test");

    REQUIRE(events.size() >= 6);
    CHECK(events[0]["event"] == "SessionOpened");
    CHECK(events[0]["session"] == "s1");
    for (std::size_t i = 0; i < events.size(); ++i) {
        CHECK(events[i]["seq"] == static_cast<int>(i + 1));
    }
    // Events of a request are written before its reply.
    std::size_t mode_reply = 0;
    std::size_t mode_event = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].value("id", json()) == 2) {
            mode_reply = i;
        }
        if (lines[i].value("event", "") == "ModeChanged") {
            mode_event = i;
        }
    }
    CHECK(mode_event < mode_reply);
}
