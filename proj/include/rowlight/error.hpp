#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rowlight {

// Every failure the system can report. The names are the machine-readable
// codes carried by HTTP error bodies, log records, and CLI stderr.
enum class ErrorCode {
    MalformedXml,
    SchemaViolation,
    DanglingReference,
    RowOutOfRange,
    UnknownComponent,
    YamlInvalid,
    MillivoltsOutOfRange,
    DutyOutOfRange,
    DurationOutOfRange,
    UnknownPin,
    FrameMalformed,
    ContractViolation,
    InvalidFixture,
    InvalidArgument,
    DeviceGone,
    PinBusy,
    ModeViolation,
    ParamOutOfBounds,
    InvalidParams,
    UnknownTool,
    NoSchematic,
    EmptyQuery,
    AgentUnavailable,
    UnknownTest,
    UnknownSuggestion,
    InvalidState,
    MissingObservation,
    UnknownSession,
    NotFound,
    LogCorrupt,
    ConfigInvalid,
    IoError,
};

std::span<const ErrorCode> all_error_codes();

// PascalCase name, e.g. "RowOutOfRange".
std::string_view error_name(ErrorCode code);
std::optional<ErrorCode> error_from_name(std::string_view name);

// snake_case form used on the board wire, e.g. "row_out_of_range".
std::string wire_error_name(ErrorCode code);
std::optional<ErrorCode> error_from_wire_name(std::string_view name);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const { return error_name(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace rowlight
