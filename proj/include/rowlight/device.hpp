#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rowlight/protocol.hpp"

namespace rowlight::device {

using protocol::BoardCommand;
using protocol::BoardResponse;
using protocol::PinId;

struct Sample {
    std::int64_t t_ms = 0;  // since series start
    int value_mv = 0;
    bool operator==(const Sample&) const = default;
};

struct TimeSeries {
    PinId pin;
    int interval_ms = 1;
    std::vector<Sample> samples;
    bool operator==(const TimeSeries&) const = default;
};

struct SequenceStep {
    int millivolts = 0;
    int duration_ms = 1;
    bool operator==(const SequenceStep&) const = default;
};

// Called once per frame sent to the board, with the board's answer.
using FrameObserver = std::function<void(const std::string& frame, const BoardResponse& response)>;

/// Uniform handle to an augmented breadboard. Commands on one handle execute
/// strictly in order; implementations are safe to call from several threads.
class Device {
public:
    virtual ~Device() = default;

    // Throws DeviceGone or PinBusy, plus validation errors for bad commands.
    virtual BoardResponse execute(const BoardCommand& cmd) = 0;

    // floor(duration / interval) + 1 reads at t = 0, interval, 2*interval, ...
    virtual TimeSeries sample_series(const PinId& pin, int interval_ms, int duration_ms) = 0;

    // Drives the steps back to back starting now; the pin returns to 0 mV after
    // the last one. Returns without waiting for the sequence to finish.
    virtual void play_sequence(const PinId& pin, std::span<const SequenceStep> steps) = 0;

    // Cancels a running sequence or timed output and drives the pin to 0 mV.
    virtual void stop(const PinId& pin) = 0;

    virtual void wait(int ms) = 0;

    // Whether an analog input is unconnected, when the backend can tell.
    virtual std::optional<bool> floating(const PinId&) { return std::nullopt; }

    virtual void close() = 0;
    virtual bool is_open() const = 0;

    void set_frame_observer(FrameObserver observer);

protected:
    void notify_frame(const std::string& frame, const BoardResponse& response);

private:
    std::mutex observer_mutex_;
    FrameObserver observer_;
};

// Shared argument checks. Throw UnknownPin / InvalidArgument and the
// board-protocol bound errors.
void validate_series_request(const PinId& pin, int interval_ms, int duration_ms);
void validate_sequence(const PinId& pin, std::span<const SequenceStep> steps);

std::int64_t sequence_duration_ms(std::span<const SequenceStep> steps);

// "t_ms,value_mv" header followed by one line per sample.
std::string series_to_csv(const TimeSeries& series);

}  // namespace rowlight::device
