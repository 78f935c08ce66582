// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "harness.hpp"
#include "oracles.hpp"
#include "rowlight/service.hpp"
#include "rowlight/session_log.hpp"
#include "rowlight/sim_device.hpp"
#include "rowlight/test_engine.hpp"

using namespace rowlight;
using namespace rowlight::agent;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Failed {
    std::string why;
};

void expect(bool ok, const std::string& why) {
    if (!ok) {
        throw Failed{why};
    }
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    throw Failed{"call did not fail"};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixture(const std::string& name) { return oracle::read_text(harness::fixture_path(name)); }

// ---------------------------------------------------------------------------

std::string netlist_canonicalization() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1000);
    for (int i = 0; i < 1000; ++i) {
        const auto circuit = oracle::random_circuit(rng);
        const auto dirty = netlist::parse_netlist_xml(circuit.dirty);
        const auto clean = netlist::parse_netlist_xml(circuit.clean);
        const std::string yaml = netlist::emit_yaml(dirty);
        expect(netlist::canonicalize(dirty) == dirty, "canonicalize not idempotent on netlist " + std::to_string(i));
        expect(yaml == netlist::emit_yaml(clean), "dirty and clean YAML differ on netlist " + std::to_string(i));
        expect(netlist::parse_yaml(yaml) == dirty, "YAML round trip differs on netlist " + std::to_string(i));
        expect(netlist::emit_yaml(netlist::parse_yaml(yaml)) == yaml, "YAML bytes drift on netlist " + std::to_string(i));
    }
    const double s = seconds_since(t0);
    expect(s < 10.0, "took " + std::to_string(s) + " s");
    std::ostringstream out;
    out << "1000 netlists in " << s << " s";
    return out.str();
}

std::string protocol_conformance() {
    using namespace protocol;
    const std::string golden_dir = std::string(ROWLIGHT_GOLDEN) + "/protocol/";
    const PinId d0("D0");
    const std::vector<std::pair<std::string, BoardCommand>> commands = {
        {"led_blink", Led{3, LedPattern::Blink}},
        {"led_on", Led{1, LedPattern::On}},
        {"led_off", Led{50, LedPattern::Off}},
        {"led_blink_slow", Led{12, LedPattern::BlinkSlow}},
        {"out_v_hold", OutputVoltage{d0, 2500, std::nullopt}},
        {"out_v_timed", OutputVoltage{PinId("D3"), 5000, 60000}},
        {"out_pwm_hold", OutputPwm{PinId("D1"), 128, std::nullopt}},
        {"out_pwm_timed", OutputPwm{PinId("D2"), 255, 1}},
        {"read", ReadAnalog{PinId("A0")}},
    };
    for (const auto& [name, cmd] : commands) {
        validate_command(cmd);
        expect(encode_command(cmd) == oracle::read_text(golden_dir + name + ".jsonl"), "golden mismatch: " + name);
        expect(decode_command(encode_command(cmd)) == cmd, "decode mismatch: " + name);
    }
    const std::vector<std::pair<std::string, BoardResponse>> responses = {
        {"response_ok", BoardResponse::success()},
        {"response_reading", BoardResponse::reading(2500)},
        {"response_error", BoardResponse::failure("pin_busy")},
    };
    for (const auto& [name, r] : responses) {
        const std::string g = oracle::read_text(golden_dir + name + ".jsonl");
        expect(encode_response(r) == g, "golden mismatch: " + name);
        expect(decode_response(g) == r, "decode mismatch: " + name);
    }

    struct Bound {
        const char* field;
        int min;
        int max;
        ErrorCode code;
        std::function<BoardCommand(int)> make;
    };
    const std::vector<Bound> bounds = {
        {"row", 1, 50, ErrorCode::RowOutOfRange, [](int v) { return BoardCommand(Led{v, LedPattern::On}); }},
        {"mv", 0, 5000, ErrorCode::MillivoltsOutOfRange,
         [&](int v) { return BoardCommand(OutputVoltage{d0, v, std::nullopt}); }},
        {"duty", 0, 255, ErrorCode::DutyOutOfRange,
         [&](int v) { return BoardCommand(OutputPwm{d0, v, std::nullopt}); }},
        {"ms", 1, 60000, ErrorCode::DurationOutOfRange, [&](int v) { return BoardCommand(OutputVoltage{d0, 0, v}); }},
        {"pwm ms", 1, 60000, ErrorCode::DurationOutOfRange, [&](int v) { return BoardCommand(OutputPwm{d0, 0, v}); }},
    };
    int checked = 0;
    for (const auto& b : bounds) {
        const std::string f = b.field;
        expect(code_of([&] { validate_command(b.make(b.min - 1)); }) == b.code, f + " min-1 accepted");
        validate_command(b.make(b.min));
        validate_command(b.make(b.max));
        expect(code_of([&] { validate_command(b.make(b.max + 1)); }) == b.code, f + " max+1 accepted");
        checked += 4;
    }
    return std::to_string(commands.size() + responses.size()) + " golden frames, " + std::to_string(checked) +
           " boundary cases";
}

std::string simulator_fidelity() {
    using protocol::OutputVoltage;
    using protocol::ReadAnalog;
    const PinId a0("A0"), a1("A1"), d0("D0"), d1("D1");
    auto open = [](const std::string& name) {
        const auto f = device::load_fixture_file(harness::fixture_path(name));
        return device::open_sim(f.fixture, f.options);
    };
    auto equal = open("equal-divider.yaml");
    equal->execute(OutputVoltage{d0, 5000, std::nullopt});
    const auto r1 = equal->execute(ReadAnalog{a0});
    expect(r1.value_mv == 2500, "equal divider read " + std::to_string(r1.value_mv.value_or(-1)));

    auto quarter = open("quarter-divider.yaml");
    quarter->execute(OutputVoltage{d0, 3300, std::nullopt});
    const auto r2 = quarter->execute(ReadAnalog{a0});
    expect(r2.value_mv == 825, "quarter divider read " + std::to_string(r2.value_mv.value_or(-1)));

    auto noisy = open("noisy.yaml");
    noisy->execute(OutputVoltage{d1, 4000, std::nullopt});
    const auto s0 = noisy->sample_series(a0, 1, 9999);
    const auto s1 = noisy->sample_series(a1, 1, 9999);
    expect(s0.samples.size() == 10000 && s1.samples.size() == 10000, "expected 10000 samples per pin");
    std::set<int> distinct;
    for (const auto& p : s0.samples) {
        expect(p.value_mv >= 2450 && p.value_mv <= 2550, "A0 sample " + std::to_string(p.value_mv) + " outside 2500±50");
        distinct.insert(p.value_mv);
    }
    for (const auto& p : s1.samples) {
        expect(p.value_mv >= 1980 && p.value_mv <= 2020, "A1 sample " + std::to_string(p.value_mv) + " outside 2000±20");
    }
    expect(distinct.size() > 1, "noise produced a constant");
    return "2500 mV, 825 mV, 20000 noisy samples in bounds";
}

std::string mode_gating() {
    harness::Rig rig("adversarial.yaml");
    auto& s = *rig.session;
    s.sync_schematic(netlist::parse_netlist_xml(fixture("loveometer-min.xml")));
    s.submit_query("Create tests for my circuit.");
    s.set_mode(Mode::Test);
    s.submit_query("Suggest a fix.");
    const auto st = s.snapshot();
    expect(st.artifacts.tests.empty(), "tests created in Ask mode");
    expect(st.artifacts.suggestions.empty(), "suggestions created in Test mode");
    expect(st.artifacts.groups.empty(), "groups created");
    int rejected = 0;
    for (const auto& t : st.turns) {
        if (t.role == Role::Tool && t.payload.is_object() && t.payload.contains("call_id")) {
            expect(t.payload["ok"] == false && t.payload["error"] == "ModeViolation",
                   "call " + t.payload["call_id"].get<std::string>() + " not rejected with ModeViolation");
            ++rejected;
        }
    }
    expect(rejected == 5, std::to_string(rejected) + " rejections, expected 5");
    // The rejections are in the persisted log, not only in memory.
    expect(harness::fold(*rig.records) == st, "log does not reproduce the rejections");
    expect(rig.frames().empty(), "board frames were sent");
    return "5 of 5 wrong-mode calls rejected";
}

std::string highlighting_oracle() {
    int components = 0;
    for (const char* name : {"loveometer-min.xml", "timer555.xml"}) {
        const auto n = netlist::parse_netlist_xml(fixture(name));
        for (const auto& c : n.components) {
            harness::Rig rig("ask-highlight.yaml");
            rig.session->sync_schematic(n);
            rig.session->highlight_component(c.id);
            const auto brute = oracle::scan_rows(n, c.id);
            std::set<int> lit;
            for (const auto& f : rig.frames()) {
                const json j = json::parse(f);
                expect(j["cmd"] == "led", "non-LED frame for " + c.id);
                lit.insert(j["row"].get<int>());
            }
            expect(lit == brute, "rows differ for " + c.id);
            expect(rig.frames().size() == brute.size(), "frame count differs for " + c.id);
            ++components;
        }
    }
    return std::to_string(components) + " components";
}

std::string end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();
    harness::Rig rig("end-to-end.yaml", "powered-divider.yaml");
    auto& s = *rig.session;
    s.sync_schematic(netlist::parse_netlist_xml(fixture("loveometer-min.xml")));
    s.set_mode(Mode::Test);
    const auto outcome = s.submit_query("Please add a test to check the divider.");
    expect(outcome.actions.size() == 1 && outcome.actions[0]["type"] == "test_created", "no test created");
    const std::string id = outcome.actions[0]["test_id"];
    const auto created = *s.snapshot().artifacts.find_test(id);
    expect(std::get<VoltageMeasurement>(created.kind).expected == MillivoltRange{2300, 2700}, "expected range");

    highlight_probes(s, id);
    const auto result = run_test(s, id);
    expect(std::get<Reading>(result).value_mv == 2500, "reading");
    expect(submit_result(s, id) == Verdict::Pass, "verdict");
    const std::string text = interpret(s, id);
    const auto tape = load_tape_file(harness::fixture_path("tapes/end-to-end.yaml"));
    expect(text == tape.replies.at(1).text, "interpretation is not the tape analysis");

    const auto statuses = rig.statuses();
    const auto thinking = std::find(statuses.begin(), statuses.end(), StatusEvent::Kind::Thinking);
    const auto adding = std::find(statuses.begin(), statuses.end(), StatusEvent::Kind::AddingTests);
    expect(thinking != statuses.end() && adding != statuses.end() && thinking < adding,
           "Thinking then AddingTests not in the event sequence");

    const SessionState live = s.snapshot();
    expect(live.artifacts.find_test(id)->state == Lifecycle::Interpreted, "test not interpreted");
    std::stringstream log;
    for (const auto& r : *rig.records) {
        log << record_to_json(r).dump() << "\n";
    }
    expect(service::replay_stream(log).state == live, "replayed state differs");
    const double secs = seconds_since(t0);
    expect(secs < 5.0, "took " + std::to_string(secs) + " s");
    std::ostringstream out;
    out << rig.records->size() << " records, replay identical, " << secs << " s";
    return out.str();
}

std::string signal_pattern() {
    harness::Rig rig("signal.yaml", "unity-divider.yaml");
    auto& s = *rig.session;
    s.set_mode(Mode::Test);
    s.submit_query("Check the square wave.");
    const auto st = s.snapshot();
    expect(st.artifacts.tests.size() == 1, "no signal test");
    const auto& p = std::get<SignalPattern>(st.artifacts.tests[0].kind);
    const auto series = std::get<TimeSeries>(run_test(s, st.artifacts.tests[0].id));

    std::vector<oracle::Step> schedule;
    for (int i = 0; i < 3; ++i) {
        schedule.push_back({5000, 20});
        schedule.push_back({0, 20});
    }
    const std::size_t expected_samples = 120 / 10 + 1;
    expect(series.samples.size() == expected_samples, std::to_string(series.samples.size()) + " samples");
    for (const auto& sample : series.samples) {
        expect(sample.value_mv == oracle::schedule_mv(schedule, sample.t_ms),
               "sample at " + std::to_string(sample.t_ms) + " ms reads " + std::to_string(sample.value_mv));
    }
    const std::size_t frames = rig.frames().size();
    expect(frames == p.steps.size() + series.samples.size(),
           std::to_string(frames) + " frames for " + std::to_string(p.steps.size()) + " steps");
    return std::to_string(p.steps.size()) + " steps + " + std::to_string(series.samples.size()) + " samples = " +
           std::to_string(frames) + " frames";
}

// ---- crash recovery ---------------------------------------------------------

service::ServiceOptions service_options(const fs::path& dir) {
    const auto f = device::load_fixture_file(harness::fixture_path("powered-divider.yaml"));
    service::ServiceOptions o;
    o.device = device::open_sim(f.fixture, f.options);
    o.agent = std::make_shared<ScriptedAgent>(load_tape_file(harness::fixture_path("tapes/end-to-end.yaml")));
    o.log_dir = dir;
    return o;
}

json request(service::Service& svc, const std::string& path, const std::string& body = "{}",
             const std::string& method = "POST") {
    const auto r = svc.handle({method, path, body});
    expect(r.status < 300, method + " " + path + " -> " + std::to_string(r.status) + " " + r.body);
    return json::parse(r.body);
}

// Takes a session from whatever point the log reached to an interpreted test.
void finish_scenario(service::Service& svc) {
    if (svc.session_ids().empty()) {
        request(svc, "/session");
    }
    json st = request(svc, "/session/s1/state", "", "GET");
    if (st["schematic"].is_null()) {
        request(svc, "/session/s1/schematic", fixture("loveometer-min.xml"));
    }
    if (st["mode"] != "test") {
        request(svc, "/session/s1/mode", R"({"mode":"test"})");
    }
    if (st["completed_queries"] == 0) {
        request(svc, "/session/s1/query", R"({"text":"Please add a test to check the divider."})");
    }
    st = request(svc, "/session/s1/state", "", "GET");
    expect(!st["tests"].empty(), "no test after the query");
    const json test = st["tests"].back();
    const std::string id = test["id"];
    const std::string state = test["state"];
    const std::vector<std::string> order = {"Created", "ProbesHighlighted", "Running", "ResultCaptured",
                                            "Submitted", "Interpreted"};
    const auto at = std::find(order.begin(), order.end(), state) - order.begin();
    if (at <= 0) {
        request(svc, "/tests/" + id + "/highlight");
    }
    if (at <= 2) {
        request(svc, "/tests/" + id + "/run");
    }
    if (at <= 3) {
        request(svc, "/tests/" + id + "/submit");
    }
    if (at <= 4) {
        request(svc, "/tests/" + id + "/interpret");
    }
    const json done = request(svc, "/tests/" + id, "", "GET");
    expect(done["state"] == "Interpreted", "test ended in " + done["state"].get<std::string>());
    expect(done["verdict"] == "Pass", "verdict " + done["verdict"].dump());
}

std::string crash_recovery() {
    const fs::path root = fs::temp_directory_path() / ("rowlight-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::vector<std::string> lines;
    {
        service::Service svc(service_options(root / "full"));
        finish_scenario(svc);
        std::ifstream in(root / "full" / "s1.jsonl");
        for (std::string l; std::getline(in, l);) {
            lines.push_back(l);
        }
    }
    expect(lines.size() > 10, "scenario log too short");

    // Every cut point, once at a record boundary and once with half of the
    // next record written.
    int cuts = 0;
    for (std::size_t k = 0; k <= lines.size(); ++k) {
        for (const bool torn : {false, true}) {
            if (torn && k == lines.size()) {
                continue;
            }
            const fs::path dir = root / ("cut-" + std::to_string(k) + (torn ? "t" : ""));
            fs::create_directories(dir);
            {
                std::ofstream out(dir / "s1.jsonl", std::ios::binary);
                for (std::size_t i = 0; i < k; ++i) {
                    out << lines[i] << "\n";
                }
                if (torn) {
                    out << lines[k].substr(0, lines[k].size() / 2);
                }
            }
            try {
                service::Service svc(service_options(dir));
                finish_scenario(svc);
                const auto live = svc.session("s1")->snapshot();
                expect(service::replay_file(dir / "s1.jsonl").state == live, "log and live state differ");
            } catch (const Failed& f) {
                throw Failed{"cut after record " + std::to_string(k) + (torn ? " (torn)" : "") + ": " + f.why};
            } catch (const std::exception& e) {
                throw Failed{"cut after record " + std::to_string(k) + (torn ? " (torn)" : "") + ": " + e.what()};
            }
            fs::remove_all(dir);
            ++cuts;
        }
    }
    fs::remove_all(root);
    return std::to_string(cuts) + " cut points recovered";
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<std::string()>>> criteria = {
        {"netlist-canonicalization", netlist_canonicalization},
        {"protocol-conformance", protocol_conformance},
        {"simulator-fidelity", simulator_fidelity},
        {"mode-gating", mode_gating},
        {"highlighting-oracle", highlighting_oracle},
        {"end-to-end-scenario", end_to_end},
        {"signal-pattern-scenario", signal_pattern},
        {"crash-recovery", crash_recovery},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        try {
            std::cout << "PASS " << name << ": " << check() << std::endl;
        } catch (const Failed& f) {
            ++failures;
            std::cout << "FAIL " << name << ": " << f.why << std::endl;
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "FAIL " << name << ": unexpected " << e.what() << std::endl;
        }
    }
    return failures == 0 ? 0 : 1;
}
