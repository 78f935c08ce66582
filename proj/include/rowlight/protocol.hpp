#pragma once

// Board wire format: one minified JSON object per line, LF-terminated.
//
//   {"cmd":"led","row":<1..50>,"pattern":"on"|"off"|"blink"|"blink_slow"}
//   {"cmd":"out_v","pin":"D0".."D3","mv":<0..5000>[,"ms":<1..60000>]}
//   {"cmd":"out_pwm","pin":"D0".."D3","duty":<0..255>[,"ms":<1..60000>]}
//   {"cmd":"read","pin":"A0".."A3"}
//
//   {"ok":true[,"mv":<0..5000>]}  |  {"ok":false,"error":"<code>"}
//
// Key order is fixed. An output without "ms" holds until changed; with "ms"
// it reverts to 0 mV when the duration elapses.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace rowlight::protocol {

inline constexpr int kMinRow = 1;
inline constexpr int kMaxRow = 50;
inline constexpr int kMinMillivolts = 0;
inline constexpr int kMaxMillivolts = 5000;
inline constexpr int kMinDuty = 0;
inline constexpr int kMaxDuty = 255;
inline constexpr int kMinDurationMs = 1;
inline constexpr int kMaxDurationMs = 60000;

enum class LedPattern { On, Off, Blink, BlinkSlow };

std::string_view to_string(LedPattern pattern);
std::optional<LedPattern> led_pattern_from_string(std::string_view s);

/// A pin name from the board's namespace. Holds any string so that commands
/// naming a nonexistent pin can be represented and rejected by validation.
class PinId {
public:
    PinId() = default;
    explicit PinId(std::string name) : name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }
    bool is_analog_in() const;   // A0..A3
    bool is_signal_out() const;  // D0..D3

    auto operator<=>(const PinId&) const = default;

private:
    std::string name_;
};

std::span<const PinId> analog_in_pins();
std::span<const PinId> signal_out_pins();

struct Led {
    int row = 0;
    LedPattern pattern = LedPattern::Off;
    bool operator==(const Led&) const = default;
};

struct OutputVoltage {
    PinId pin;
    int millivolts = 0;
    std::optional<int> duration_ms;
    bool operator==(const OutputVoltage&) const = default;
};

struct OutputPwm {
    PinId pin;
    int duty = 0;
    std::optional<int> duration_ms;
    bool operator==(const OutputPwm&) const = default;
};

struct ReadAnalog {
    PinId pin;
    bool operator==(const ReadAnalog&) const = default;
};

using BoardCommand = std::variant<Led, OutputVoltage, OutputPwm, ReadAnalog>;

struct BoardResponse {
    bool ok = true;
    std::optional<int> value_mv;
    std::optional<std::string> error;

    static BoardResponse success() { return {}; }
    static BoardResponse reading(int mv) { return {true, mv, std::nullopt}; }
    static BoardResponse failure(std::string code) { return {false, std::nullopt, std::move(code)}; }

    bool operator==(const BoardResponse&) const = default;
};

// Throws RowOutOfRange, MillivoltsOutOfRange, DutyOutOfRange,
// DurationOutOfRange or UnknownPin.
void validate_command(const BoardCommand& cmd);

// Frame including the trailing LF. Expects a validated command.
std::string encode_command(const BoardCommand& cmd);

// Board side of the codec. Throws FrameMalformed for anything outside the
// grammar; bounds are left to validate_command.
BoardCommand decode_command(std::string_view line);

std::string encode_response(const BoardResponse& response);

// Throws FrameMalformed or ContractViolation. Unknown keys are ignored.
BoardResponse decode_response(std::string_view line);

// Response-shape check that depends on the command: reads carry a value,
// everything else does not. Throws ContractViolation.
void check_response_for(const BoardCommand& cmd, const BoardResponse& response);

}  // namespace rowlight::protocol
