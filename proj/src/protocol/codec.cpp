#include "rowlight/protocol.hpp"

#include <array>
#include <limits>

#include <json.hpp>

#include "rowlight/error.hpp"

namespace rowlight::protocol {

namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr std::array<std::pair<LedPattern, std::string_view>, 4> kPatterns{{
    {LedPattern::On, "on"},
    {LedPattern::Off, "off"},
    {LedPattern::Blink, "blink"},
    {LedPattern::BlinkSlow, "blink_slow"},
}};

const std::array<PinId, 4> kAnalogIn{PinId("A0"), PinId("A1"), PinId("A2"), PinId("A3")};
const std::array<PinId, 4> kSignalOut{PinId("D0"), PinId("D1"), PinId("D2"), PinId("D3")};

void check_range(ErrorCode code, const char* field, int value, int lo, int hi) {
    if (value < lo || value > hi) {
        fail(code, std::string(field) + " " + std::to_string(value) + " outside " +
                       std::to_string(lo) + ".." + std::to_string(hi));
    }
}

void check_duration(const std::optional<int>& ms) {
    if (ms) {
        check_range(ErrorCode::DurationOutOfRange, "duration_ms", *ms, kMinDurationMs,
                    kMaxDurationMs);
    }
}

std::string frame(const ordered_json& j) { return j.dump() + "\n"; }

// Strips exactly one trailing LF (and a CR before it) and parses the object.
json parse_frame(std::string_view line) {
    if (!line.empty() && line.back() == '\n') {
        line.remove_suffix(1);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
    }
    if (line.empty()) {
        fail(ErrorCode::FrameMalformed, "empty frame");
    }
    if (line.find('\n') != std::string_view::npos) {
        fail(ErrorCode::FrameMalformed, "frame contains more than one line");
    }
    json j = json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        fail(ErrorCode::FrameMalformed, "frame is not a JSON object: " + std::string(line));
    }
    return j;
}

int int_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) {
        fail(ErrorCode::FrameMalformed, std::string("missing integer '") + key + "'");
    }
    auto v = it->get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        fail(ErrorCode::FrameMalformed, std::string("'") + key + "' does not fit an int");
    }
    return static_cast<int>(v);
}

std::optional<int> optional_int_field(const json& j, const char* key) {
    if (!j.contains(key)) {
        return std::nullopt;
    }
    return int_field(j, key);
}

std::string string_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        fail(ErrorCode::FrameMalformed, std::string("missing string '") + key + "'");
    }
    return it->get<std::string>();
}

}  // namespace

std::string_view to_string(LedPattern pattern) {
    for (const auto& [p, name] : kPatterns) {
        if (p == pattern) {
            return name;
        }
    }
    return "off";
}

std::optional<LedPattern> led_pattern_from_string(std::string_view s) {
    for (const auto& [p, name] : kPatterns) {
        if (name == s) {
            return p;
        }
    }
    return std::nullopt;
}

bool PinId::is_analog_in() const {
    for (const auto& p : kAnalogIn) {
        if (p.name_ == name_) {
            return true;
        }
    }
    return false;
}

bool PinId::is_signal_out() const {
    for (const auto& p : kSignalOut) {
        if (p.name_ == name_) {
            return true;
        }
    }
    return false;
}

std::span<const PinId> analog_in_pins() { return kAnalogIn; }
std::span<const PinId> signal_out_pins() { return kSignalOut; }

void validate_command(const BoardCommand& cmd) {
    std::visit(
        [](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, Led>) {
                check_range(ErrorCode::RowOutOfRange, "row", c.row, kMinRow, kMaxRow);
            } else if constexpr (std::is_same_v<T, OutputVoltage>) {
                if (!c.pin.is_signal_out()) {
                    fail(ErrorCode::UnknownPin, "'" + c.pin.name() + "' is not a signal-out pin");
                }
                check_range(ErrorCode::MillivoltsOutOfRange, "millivolts", c.millivolts,
                            kMinMillivolts, kMaxMillivolts);
                check_duration(c.duration_ms);
            } else if constexpr (std::is_same_v<T, OutputPwm>) {
                if (!c.pin.is_signal_out()) {
                    fail(ErrorCode::UnknownPin, "'" + c.pin.name() + "' is not a signal-out pin");
                }
                check_range(ErrorCode::DutyOutOfRange, "duty", c.duty, kMinDuty, kMaxDuty);
                check_duration(c.duration_ms);
            } else {
                if (!c.pin.is_analog_in()) {
                    fail(ErrorCode::UnknownPin, "'" + c.pin.name() + "' is not an analog-in pin");
                }
            }
        },
        cmd);
}

std::string encode_command(const BoardCommand& cmd) {
    return std::visit(
        [](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            ordered_json j;
            if constexpr (std::is_same_v<T, Led>) {
                j["cmd"] = "led";
                j["row"] = c.row;
                j["pattern"] = to_string(c.pattern);
            } else if constexpr (std::is_same_v<T, OutputVoltage>) {
                j["cmd"] = "out_v";
                j["pin"] = c.pin.name();
                j["mv"] = c.millivolts;
                if (c.duration_ms) {
                    j["ms"] = *c.duration_ms;
                }
            } else if constexpr (std::is_same_v<T, OutputPwm>) {
                j["cmd"] = "out_pwm";
                j["pin"] = c.pin.name();
                j["duty"] = c.duty;
                if (c.duration_ms) {
                    j["ms"] = *c.duration_ms;
                }
            } else {
                j["cmd"] = "read";
                j["pin"] = c.pin.name();
            }
            return frame(j);
        },
        cmd);
}

BoardCommand decode_command(std::string_view line) {
    const json j = parse_frame(line);
    const std::string cmd = string_field(j, "cmd");
    if (cmd == "led") {
        auto pattern = led_pattern_from_string(string_field(j, "pattern"));
        if (!pattern) {
            fail(ErrorCode::FrameMalformed, "unknown LED pattern");
        }
        return Led{int_field(j, "row"), *pattern};
    }
    if (cmd == "out_v") {
        return OutputVoltage{PinId(string_field(j, "pin")), int_field(j, "mv"),
                             optional_int_field(j, "ms")};
    }
    if (cmd == "out_pwm") {
        return OutputPwm{PinId(string_field(j, "pin")), int_field(j, "duty"),
                         optional_int_field(j, "ms")};
    }
    if (cmd == "read") {
        return ReadAnalog{PinId(string_field(j, "pin"))};
    }
    fail(ErrorCode::FrameMalformed, "unknown cmd '" + cmd + "'");
}

std::string encode_response(const BoardResponse& response) {
    ordered_json j;
    j["ok"] = response.ok;
    if (response.ok) {
        if (response.value_mv) {
            j["mv"] = *response.value_mv;
        }
    } else {
        j["error"] = response.error.value_or("unknown");
    }
    return frame(j);
}

BoardResponse decode_response(std::string_view line) {
    const json j = parse_frame(line);
    auto ok = j.find("ok");
    if (ok == j.end() || !ok->is_boolean()) {
        fail(ErrorCode::FrameMalformed, "missing boolean 'ok'");
    }
    BoardResponse r;
    r.ok = ok->get<bool>();
    r.value_mv = optional_int_field(j, "mv");
    if (j.contains("error")) {
        r.error = string_field(j, "error");
    }

    if (r.ok && r.error) {
        fail(ErrorCode::ContractViolation, "ok response carries an error");
    }
    if (!r.ok && !r.error) {
        fail(ErrorCode::ContractViolation, "failed response without error code");
    }
    if (!r.ok && r.value_mv) {
        fail(ErrorCode::ContractViolation, "failed response carries a value");
    }
    if (r.value_mv && (*r.value_mv < kMinMillivolts || *r.value_mv > kMaxMillivolts)) {
        fail(ErrorCode::ContractViolation, "value " + std::to_string(*r.value_mv) + " mV outside " +
                                               std::to_string(kMinMillivolts) + ".." +
                                               std::to_string(kMaxMillivolts));
    }
    return r;
}

void check_response_for(const BoardCommand& cmd, const BoardResponse& response) {
    if (!response.ok) {
        return;
    }
    const bool is_read = std::holds_alternative<ReadAnalog>(cmd);
    if (is_read && !response.value_mv) {
        fail(ErrorCode::ContractViolation, "read response without a value");
    }
    if (!is_read && response.value_mv) {
        fail(ErrorCode::ContractViolation, "non-read response carries a value");
    }
}

}  // namespace rowlight::protocol
