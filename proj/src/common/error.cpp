#include "rowlight/error.hpp"

#include <array>
#include <cctype>
#include <utility>

namespace rowlight {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 32> kNames{{
    {ErrorCode::MalformedXml, "MalformedXml"},
    {ErrorCode::SchemaViolation, "SchemaViolation"},
    {ErrorCode::DanglingReference, "DanglingReference"},
    {ErrorCode::RowOutOfRange, "RowOutOfRange"},
    {ErrorCode::UnknownComponent, "UnknownComponent"},
    {ErrorCode::YamlInvalid, "YamlInvalid"},
    {ErrorCode::MillivoltsOutOfRange, "MillivoltsOutOfRange"},
    {ErrorCode::DutyOutOfRange, "DutyOutOfRange"},
    {ErrorCode::DurationOutOfRange, "DurationOutOfRange"},
    {ErrorCode::UnknownPin, "UnknownPin"},
    {ErrorCode::FrameMalformed, "FrameMalformed"},
    {ErrorCode::ContractViolation, "ContractViolation"},
    {ErrorCode::InvalidFixture, "InvalidFixture"},
    {ErrorCode::InvalidArgument, "InvalidArgument"},
    {ErrorCode::DeviceGone, "DeviceGone"},
    {ErrorCode::PinBusy, "PinBusy"},
    {ErrorCode::ModeViolation, "ModeViolation"},
    {ErrorCode::ParamOutOfBounds, "ParamOutOfBounds"},
    {ErrorCode::InvalidParams, "InvalidParams"},
    {ErrorCode::UnknownTool, "UnknownTool"},
    {ErrorCode::NoSchematic, "NoSchematic"},
    {ErrorCode::EmptyQuery, "EmptyQuery"},
    {ErrorCode::AgentUnavailable, "AgentUnavailable"},
    {ErrorCode::UnknownTest, "UnknownTest"},
    {ErrorCode::UnknownSuggestion, "UnknownSuggestion"},
    {ErrorCode::InvalidState, "InvalidState"},
    {ErrorCode::MissingObservation, "MissingObservation"},
    {ErrorCode::UnknownSession, "UnknownSession"},
    {ErrorCode::NotFound, "NotFound"},
    {ErrorCode::LogCorrupt, "LogCorrupt"},
    {ErrorCode::ConfigInvalid, "ConfigInvalid"},
    {ErrorCode::IoError, "IoError"},
}};

const std::array<ErrorCode, kNames.size()> kCodes = [] {
    std::array<ErrorCode, kNames.size()> out{};
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        out[i] = kNames[i].first;
    }
    return out;
}();

}  // namespace

std::span<const ErrorCode> all_error_codes() { return kCodes; }

std::string_view error_name(ErrorCode code) {
    for (const auto& [c, name] : kNames) {
        if (c == code) {
            return name;
        }
    }
    return "Unknown";
}

std::optional<ErrorCode> error_from_name(std::string_view name) {
    for (const auto& [c, n] : kNames) {
        if (n == name) {
            return c;
        }
    }
    return std::nullopt;
}

std::string wire_error_name(ErrorCode code) {
    std::string out;
    for (char ch : error_name(code)) {
        if (std::isupper(static_cast<unsigned char>(ch))) {
            if (!out.empty()) {
                out.push_back('_');
            }
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else {
            out.push_back(ch);
        }
    }
    return out;
}

std::optional<ErrorCode> error_from_wire_name(std::string_view name) {
    for (ErrorCode c : kCodes) {
        if (wire_error_name(c) == name) {
            return c;
        }
    }
    return std::nullopt;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace rowlight
