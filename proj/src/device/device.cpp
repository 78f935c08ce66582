#include "rowlight/device.hpp"

#include <numeric>
#include <sstream>

#include "rowlight/error.hpp"

namespace rowlight::device {

void Device::set_frame_observer(FrameObserver observer) {
    std::lock_guard lock(observer_mutex_);
    observer_ = std::move(observer);
}

void Device::notify_frame(const std::string& frame, const BoardResponse& response) {
    FrameObserver observer;
    {
        std::lock_guard lock(observer_mutex_);
        observer = observer_;
    }
    if (observer) {
        observer(frame, response);
    }
}

void validate_series_request(const PinId& pin, int interval_ms, int duration_ms) {
    if (!pin.is_analog_in()) {
        fail(ErrorCode::UnknownPin, "'" + pin.name() + "' is not an analog-in pin");
    }
    if (interval_ms < 1) {
        fail(ErrorCode::InvalidArgument, "sampling interval must be at least 1 ms");
    }
    if (duration_ms < interval_ms) {
        fail(ErrorCode::InvalidArgument, "sampling duration shorter than the interval");
    }
}

void validate_sequence(const PinId& pin, std::span<const SequenceStep> steps) {
    for (const auto& step : steps) {
        protocol::validate_command(protocol::OutputVoltage{pin, step.millivolts, step.duration_ms});
    }
    if (steps.empty() && !pin.is_signal_out()) {
        fail(ErrorCode::UnknownPin, "'" + pin.name() + "' is not a signal-out pin");
    }
}

std::int64_t sequence_duration_ms(std::span<const SequenceStep> steps) {
    return std::accumulate(steps.begin(), steps.end(), std::int64_t{0},
                           [](std::int64_t acc, const SequenceStep& s) { return acc + s.duration_ms; });
}

std::string series_to_csv(const TimeSeries& series) {
    std::ostringstream out;
    out << "t_ms,value_mv\n";
    for (const auto& s : series.samples) {
        out << s.t_ms << ',' << s.value_mv << '\n';
    }
    return out.str();
}

}  // namespace rowlight::device
