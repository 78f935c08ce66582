// rowlight command line: netlist conversion, service, board simulator REPL,
// log replay and tape validation.
#include <CLI11.hpp>
#include <pthread.h>
#include <signal.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "rowlight/agent_client.hpp"
#include "rowlight/error.hpp"
#include "rowlight/netlist.hpp"
#include "rowlight/serial_device.hpp"
#include "rowlight/service.hpp"
#include "rowlight/sim_device.hpp"
#include "rowlight/transports.hpp"

using namespace rowlight;

namespace {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownTool: return 3;
        case ErrorCode::InvalidParams:
        case ErrorCode::ParamOutOfBounds: return 4;
        case ErrorCode::DeviceGone:
        case ErrorCode::AgentUnavailable: return 5;
        default: return 2;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cmd_parse(const std::string& xml_path, const std::string& yaml_out) {
    const auto netlist = netlist::parse_netlist_xml(read_file(xml_path));
    const auto yaml = netlist::emit_yaml(netlist);
    if (yaml_out.empty()) {
        std::cout << yaml;
    } else {
        std::ofstream out(yaml_out, std::ios::binary);
        out << yaml;
        if (!out) {
            fail(ErrorCode::IoError, "cannot write " + yaml_out);
        }
    }
    return 0;
}

int cmd_serve(const std::string& config_path, bool stdio, int port_override) {
    auto config = service::load_config(config_path);
    if (port_override >= 0) {
        config.port = port_override;
    }
    service::Service svc(service::options_from_config(config));
    if (stdio) {
        service::serve_stdio(svc, std::cin, std::cout);
        return 0;
    }

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::HttpServer server(svc);
    const int port = server.bind(config.bind, config.port);
    std::cerr << "listening on " << config.bind << ":" << port << std::endl;
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.serve();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

void print_help(std::ostream& out) {
    out << "frames: one JSON command per line, e.g. {\"cmd\":\"read\",\"pin\":\"A0\"}\n"
           "#wait <ms>                     advance the virtual clock\n"
           "#play <pin> <mv>:<ms> ...      start a sequence\n"
           "#stop <pin>                    cancel a sequence\n"
           "#series <pin> <interval> <duration>\n"
           "#leds                          list lit rows\n"
           "#time                          virtual time in ms\n"
           "#quit\n";
}

int cmd_sim(const std::string& fixture_path) {
    auto file = device::load_fixture_file(fixture_path);
    auto sim = device::open_sim(std::move(file.fixture), file.options);
    device::BoardEmulator board(sim);

    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) {
            continue;
        }
        if (line[0] != '#') {
            std::cout << board.handle_line(line) << std::flush;
            continue;
        }
        std::istringstream words(line.substr(1));
        std::string meta;
        words >> meta;
        try {
            if (meta == "quit") {
                break;
            } else if (meta == "help") {
                print_help(std::cout);
            } else if (meta == "wait") {
                int ms = 0;
                words >> ms;
                sim->wait(ms);
                std::cout << "t=" << sim->now_ms() << "\n";
            } else if (meta == "time") {
                std::cout << "t=" << sim->now_ms() << "\n";
            } else if (meta == "play") {
                std::string pin, step;
                words >> pin;
                std::vector<device::SequenceStep> steps;
                while (words >> step) {
                    const auto colon = step.find(':');
                    if (colon == std::string::npos) {
                        fail(ErrorCode::InvalidArgument, "steps are <mv>:<ms>");
                    }
                    steps.push_back({std::stoi(step.substr(0, colon)), std::stoi(step.substr(colon + 1))});
                }
                sim->play_sequence(protocol::PinId(pin), steps);
                std::cout << "ok\n";
            } else if (meta == "stop") {
                std::string pin;
                words >> pin;
                sim->stop(protocol::PinId(pin));
                std::cout << "ok\n";
            } else if (meta == "series") {
                std::string pin;
                int interval = 10, duration = 0;
                words >> pin >> interval >> duration;
                std::cout << device::series_to_csv(sim->sample_series(protocol::PinId(pin), interval, duration));
            } else if (meta == "leds") {
                for (const auto& [row, pattern] : sim->led_rows()) {
                    if (pattern != protocol::LedPattern::Off) {
                        std::cout << row << " " << protocol::to_string(pattern) << "\n";
                    }
                }
            } else {
                std::cout << "unknown meta command; #help lists them\n";
            }
        } catch (const Error& e) {
            std::cout << "error: " << e.name() << ": " << e.what() << "\n";
        } catch (const std::exception& e) {
            std::cout << "error: " << e.what() << "\n";
        }
        std::cout << std::flush;
    }
    return 0;
}

int cmd_replay(const std::string& log_path) {
    const auto replayed = service::replay_file(log_path);
    nlohmann::json out = {{"last_seq", replayed.last_seq}, {"state", agent::state_to_json(replayed.state)}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_tape_check(const std::string& tape_path) {
    const auto tape = agent::load_tape_file(tape_path);
    const auto problems = agent::check_tape(tape);
    if (problems.empty()) {
        std::size_t calls = 0;
        for (const auto& [_, entry] : tape.replies) {
            calls += entry.calls.size();
        }
        std::cout << "ok: " << tape.replies.size() << " replies, " << calls << " calls\n";
        return 0;
    }
    int code = 0;
    for (const auto& p : problems) {
        std::cerr << "reply " << p.reply << " call " << p.call << " (" << p.tool
                  << "): " << error_name(p.code) << ": " << p.message << "\n";
        code = std::max(code, exit_code_for(p.code));
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rowlight: breadboard assistant backend"};
    app.require_subcommand(1);

    std::string xml_path, yaml_out;
    auto* parse = app.add_subcommand("parse", "Convert a netlist XML file to canonical YAML");
    parse->add_option("xml", xml_path, "Netlist XML")->required();
    parse->add_option("--yaml", yaml_out, "Write YAML here instead of stdout");

    std::string config_path;
    bool stdio = false;
    int port = -1;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--config", config_path, "Config YAML")->required();
    serve->add_flag("--stdio", stdio, "Serve JSON lines on stdin/stdout instead of HTTP");
    serve->add_option("--port", port, "Override http.port");

    std::string fixture_path;
    auto* sim = app.add_subcommand("sim", "Interactive simulated board");
    sim->add_option("--fixture", fixture_path, "Fixture YAML")->required();

    std::string log_path;
    auto* replay = app.add_subcommand("replay", "Rebuild session state from a log");
    replay->add_option("log", log_path, "Session log (JSON lines)")->required();

    std::string tape_path;
    auto* tape_check = app.add_subcommand("tape-check", "Validate a scripted-agent tape");
    tape_check->add_option("tape", tape_path, "Tape YAML")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (parse->parsed()) {
            return cmd_parse(xml_path, yaml_out);
        }
        if (serve->parsed()) {
            return cmd_serve(config_path, stdio, port);
        }
        if (sim->parsed()) {
            return cmd_sim(fixture_path);
        }
        if (replay->parsed()) {
            return cmd_replay(log_path);
        }
        if (tape_check->parsed()) {
            return cmd_tape_check(tape_path);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
