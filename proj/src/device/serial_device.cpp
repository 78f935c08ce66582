#include <vector>

#include "rowlight/error.hpp"
#include "rowlight/serial_device.hpp"

namespace rowlight::device {

SerialDevice::SerialDevice(std::unique_ptr<ByteStream> stream, SerialOptions options)
    : stream_(std::move(stream)), options_(options) {}

SerialDevice::~SerialDevice() {
    try {
        close();
    } catch (...) {
    }
}

bool SerialDevice::is_open() const {
    std::lock_guard lock(io_mutex_);
    return open_;
}

BoardResponse SerialDevice::transact(const BoardCommand& cmd) {
    const std::string frame = protocol::encode_command(cmd);
    BoardResponse response;
    {
        std::lock_guard lock(io_mutex_);
        if (!open_) {
            fail(ErrorCode::DeviceGone, "serial device closed");
        }
        try {
            stream_->write(frame);
            auto line = stream_->read_line(options_.response_timeout);
            if (!line) {
                fail(ErrorCode::DeviceGone, "no response within " +
                                                std::to_string(options_.response_timeout.count()) +
                                                " ms");
            }
            response = protocol::decode_response(*line);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DeviceGone) {
                open_ = false;
            }
            throw;
        }
    }
    notify_frame(frame, response);
    protocol::check_response_for(cmd, response);
    if (!response.ok && response.error == wire_error_name(ErrorCode::PinBusy)) {
        fail(ErrorCode::PinBusy, "board reports pin busy");
    }
    return response;
}

bool SerialDevice::busy(const PinId& pin) {
    std::lock_guard lock(state_mutex_);
    auto it = busy_until_.find(pin);
    return it != busy_until_.end() && Clock::now() < it->second;
}

BoardResponse SerialDevice::execute(const BoardCommand& cmd) {
    protocol::validate_command(cmd);
    const auto* pin = std::visit(
        [](const auto& c) -> const PinId* {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, protocol::OutputVoltage> ||
                          std::is_same_v<T, protocol::OutputPwm>) {
                return &c.pin;
            } else {
                return nullptr;
            }
        },
        cmd);
    if (pin != nullptr && busy(*pin)) {
        fail(ErrorCode::PinBusy, "timed output still running on " + pin->name());
    }
    BoardResponse response = transact(cmd);
    if (pin != nullptr) {
        std::optional<int> ms = std::visit(
            [](const auto& c) -> std::optional<int> {
                if constexpr (requires { c.duration_ms; }) {
                    return c.duration_ms;
                } else {
                    return std::nullopt;
                }
            },
            cmd);
        if (ms) {
            std::lock_guard lock(state_mutex_);
            busy_until_[*pin] = Clock::now() + std::chrono::milliseconds(*ms);
        }
    }
    return response;
}

TimeSeries SerialDevice::sample_series(const PinId& pin, int interval_ms, int duration_ms) {
    validate_series_request(pin, interval_ms, duration_ms);
    TimeSeries series{pin, interval_ms, {}};
    const auto start = Clock::now();
    for (std::int64_t t = 0; t <= duration_ms; t += interval_ms) {
        std::this_thread::sleep_until(start + std::chrono::milliseconds(t));
        const BoardResponse r = transact(protocol::ReadAnalog{pin});
        if (!r.ok) {
            fail(ErrorCode::ContractViolation, "read failed: " + r.error.value_or("?"));
        }
        series.samples.push_back({t, *r.value_mv});
    }
    return series;
}

void SerialDevice::cancel_worker(const PinId& pin) {
    std::jthread worker;
    {
        std::lock_guard lock(state_mutex_);
        auto it = workers_.find(pin);
        if (it == workers_.end()) {
            return;
        }
        worker = std::move(it->second);
        workers_.erase(it);
    }
    if (worker.joinable() && worker.get_id() != std::this_thread::get_id()) {
        worker.request_stop();
        worker.join();
    } else if (worker.joinable()) {
        worker.detach();
    }
}

void SerialDevice::play_sequence(const PinId& pin, std::span<const SequenceStep> steps) {
    validate_sequence(pin, steps);
    if (steps.empty()) {
        return;
    }
    if (!is_open()) {
        fail(ErrorCode::DeviceGone, "serial device closed");
    }
    if (busy(pin)) {
        fail(ErrorCode::PinBusy, "sequence or timed output already running on " + pin.name());
    }
    cancel_worker(pin);

    const auto start = Clock::now();
    std::lock_guard lock(state_mutex_);
    busy_until_[pin] = start + std::chrono::milliseconds(sequence_duration_ms(steps));
    workers_[pin] = std::jthread(
        [this, pin, start, plan = std::vector<SequenceStep>(steps.begin(), steps.end())](
            std::stop_token stop) {
            std::mutex m;
            std::condition_variable_any cv;
            auto at = start;
            for (const auto& step : plan) {
                {
                    std::unique_lock lk(m);
                    if (cv.wait_until(lk, stop, at, [] { return false; }) || stop.stop_requested()) {
                        return;
                    }
                }
                try {
                    transact(protocol::OutputVoltage{pin, step.millivolts, step.duration_ms});
                } catch (const Error&) {
                    return;
                }
                at += std::chrono::milliseconds(step.duration_ms);
            }
        });
}

void SerialDevice::stop(const PinId& pin) {
    if (!pin.is_signal_out()) {
        fail(ErrorCode::UnknownPin, "'" + pin.name() + "' is not a signal-out pin");
    }
    cancel_worker(pin);
    {
        std::lock_guard lock(state_mutex_);
        busy_until_.erase(pin);
    }
    transact(protocol::OutputVoltage{pin, 0, std::nullopt});
}

void SerialDevice::wait(int ms) {
    if (ms < 0) {
        fail(ErrorCode::InvalidArgument, "negative wait");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

void SerialDevice::close() {
    std::vector<PinId> pins;
    {
        std::lock_guard lock(state_mutex_);
        for (const auto& [pin, _] : workers_) {
            pins.push_back(pin);
        }
    }
    for (const auto& pin : pins) {
        cancel_worker(pin);
    }
    std::lock_guard lock(io_mutex_);
    if (open_) {
        open_ = false;
        stream_->close();
    }
}

}  // namespace rowlight::device
