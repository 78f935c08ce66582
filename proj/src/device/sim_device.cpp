#include "rowlight/sim_device.hpp"

#include <algorithm>
#include <limits>

#include "rowlight/error.hpp"

namespace rowlight::device {

namespace {

constexpr std::int64_t kForever = std::numeric_limits<std::int64_t>::max();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// round(num / den) for num >= 0, den > 0, halves rounded up.
std::int64_t round_div(std::int64_t num, std::int64_t den) { return (2 * num + den) / (2 * den); }

int clamp_mv(std::int64_t mv) {
    return static_cast<int>(
        std::clamp<std::int64_t>(mv, protocol::kMinMillivolts, protocol::kMaxMillivolts));
}

void check_model(const TransferModel& model, int depth) {
    if (depth > 16) {
        fail(ErrorCode::InvalidFixture, "transfer model nested too deeply");
    }
    std::visit(
        [depth](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Constant>) {
                if (m.millivolts < protocol::kMinMillivolts ||
                    m.millivolts > protocol::kMaxMillivolts) {
                    fail(ErrorCode::InvalidFixture,
                         "constant " + std::to_string(m.millivolts) + " mV out of range");
                }
            } else if constexpr (std::is_same_v<T, Divider>) {
                if (!m.source.is_signal_out()) {
                    fail(ErrorCode::InvalidFixture,
                         "divider source '" + m.source.name() + "' is not a signal-out pin");
                }
                if (m.ratio.den <= 0 || m.ratio.num < 0 || m.ratio.num > m.ratio.den) {
                    fail(ErrorCode::InvalidFixture, "divider ratio outside [0, 1]");
                }
            } else if constexpr (std::is_same_v<T, Noisy>) {
                if (!m.base) {
                    fail(ErrorCode::InvalidFixture, "noisy model without a base");
                }
                if (m.amplitude_mv < 0) {
                    fail(ErrorCode::InvalidFixture, "negative noise amplitude");
                }
                check_model(*m.base, depth + 1);
            }
        },
        model.model);
}

}  // namespace

int noise_offset(std::uint64_t seed, std::int64_t t_ms, int amplitude_mv) {
    if (amplitude_mv <= 0) {
        return 0;
    }
    const std::uint64_t h = splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(t_ms));
    const auto span = static_cast<std::uint64_t>(2 * amplitude_mv + 1);
    return static_cast<int>(h % span) - amplitude_mv;
}

SimDevice::SimDevice(VirtualFixture fixture, SimOptions options) : options_(options) {
    if (options_.latency_ms < 0) {
        fail(ErrorCode::InvalidFixture, "negative latency");
    }
    for (auto& binding : fixture.pins) {
        if (!binding.pin.is_analog_in()) {
            fail(ErrorCode::InvalidFixture,
                 "fixture binds '" + binding.pin.name() + "', which is not an analog-in pin");
        }
        check_model(binding.model, 0);
        if (!models_.emplace(binding.pin, std::move(binding.model)).second) {
            fail(ErrorCode::InvalidFixture, "pin " + binding.pin.name() + " bound twice");
        }
    }
    for (const auto& pin : protocol::analog_in_pins()) {
        models_.try_emplace(pin, TransferModel{Open{}});
    }
    for (const auto& [pin, mv] : options_.hold_mv) {
        if (!pin.is_signal_out()) {
            fail(ErrorCode::InvalidFixture, "hold on '" + pin.name() + "', which is not a signal-out pin");
        }
        if (mv < protocol::kMinMillivolts || mv > protocol::kMaxMillivolts) {
            fail(ErrorCode::InvalidFixture, "hold level " + std::to_string(mv) + " mV outside 0..5000");
        }
        drive_[pin].push_back({0, kForever, {mv, 1}});
    }
}

std::shared_ptr<SimDevice> open_sim(VirtualFixture fixture, SimOptions options) {
    return std::make_shared<SimDevice>(std::move(fixture), options);
}

void SimDevice::require_open() const {
    if (!open_) {
        fail(ErrorCode::DeviceGone, "simulated device closed");
    }
}

bool SimDevice::busy(const PinId& pin) const {
    auto it = busy_until_.find(pin);
    return it != busy_until_.end() && now_ < it->second;
}

Rational SimDevice::level_at(const PinId& pin, std::int64_t t) const {
    auto it = drive_.find(pin);
    if (it == drive_.end()) {
        return {};
    }
    for (const auto& seg : it->second) {
        if (seg.start <= t && t < seg.end) {
            return seg.level;
        }
    }
    return {};
}

SimDevice::Reading SimDevice::evaluate(const TransferModel& model, std::int64_t t) const {
    return std::visit(
        [&](const auto& m) -> Reading {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return {m.millivolts, false};
            } else if constexpr (std::is_same_v<T, Divider>) {
                const Rational level = level_at(m.source, t);
                return {clamp_mv(round_div(level.num * m.ratio.num, level.den * m.ratio.den)),
                        false};
            } else if constexpr (std::is_same_v<T, Noisy>) {
                const Reading base = evaluate(*m.base, t);
                return {clamp_mv(std::int64_t{base.millivolts} +
                                 noise_offset(m.seed, t, m.amplitude_mv)),
                        base.floating};
            } else {
                return {0, true};
            }
        },
        model.model);
}

SimDevice::Reading SimDevice::read_at(const PinId& pin, std::int64_t t) const {
    return evaluate(models_.at(pin), t);
}

void SimDevice::truncate(const PinId& pin, std::int64_t t) {
    auto& segs = drive_[pin];
    std::erase_if(segs, [t](const Segment& s) { return s.start >= t; });
    for (auto& s : segs) {
        s.end = std::min(s.end, t);
    }
    std::erase_if(segs, [](const Segment& s) { return s.end <= s.start; });
}

void SimDevice::advance_to(std::int64_t t) {
    while (!pending_.empty() && pending_.front().at <= t) {
        PendingFrame next = std::move(pending_.front());
        pending_.erase(pending_.begin());
        now_ = std::max(now_, next.at);
        notify_frame(next.frame, BoardResponse::success());
    }
    now_ = std::max(now_, t);
}

BoardResponse SimDevice::execute(const BoardCommand& cmd) {
    std::lock_guard lock(mutex_);
    require_open();
    protocol::validate_command(cmd);
    advance_to(now_ + options_.latency_ms);

    BoardResponse response = std::visit(
        [&](const auto& c) -> BoardResponse {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, protocol::Led>) {
                leds_[c.row] = c.pattern;
                return BoardResponse::success();
            } else if constexpr (std::is_same_v<T, protocol::ReadAnalog>) {
                return BoardResponse::reading(read_at(c.pin, now_).millivolts);
            } else {
                if (busy(c.pin)) {
                    fail(ErrorCode::PinBusy, "timed output still running on " + c.pin.name());
                }
                Rational level;
                if constexpr (std::is_same_v<T, protocol::OutputVoltage>) {
                    level = {c.millivolts, 1};
                } else {
                    level = {std::int64_t{c.duty} * protocol::kMaxMillivolts, protocol::kMaxDuty};
                }
                truncate(c.pin, now_);
                const std::int64_t end = c.duration_ms ? now_ + *c.duration_ms : kForever;
                drive_[c.pin].push_back({now_, end, level});
                if (c.duration_ms) {
                    busy_until_[c.pin] = end;
                }
                return BoardResponse::success();
            }
        },
        cmd);
    notify_frame(protocol::encode_command(cmd), response);
    return response;
}

TimeSeries SimDevice::sample_series(const PinId& pin, int interval_ms, int duration_ms) {
    std::lock_guard lock(mutex_);
    require_open();
    validate_series_request(pin, interval_ms, duration_ms);

    TimeSeries series{pin, interval_ms, {}};
    const std::int64_t start = now_;
    const std::string frame = protocol::encode_command(protocol::ReadAnalog{pin});
    for (std::int64_t t = 0; t <= duration_ms; t += interval_ms) {
        advance_to(start + t);
        const int mv = read_at(pin, now_).millivolts;
        notify_frame(frame, BoardResponse::reading(mv));
        series.samples.push_back({t, mv});
    }
    advance_to(start + duration_ms);
    return series;
}

void SimDevice::play_sequence(const PinId& pin, std::span<const SequenceStep> steps) {
    std::lock_guard lock(mutex_);
    require_open();
    validate_sequence(pin, steps);
    if (steps.empty()) {
        return;
    }
    if (busy(pin)) {
        fail(ErrorCode::PinBusy, "sequence or timed output already running on " + pin.name());
    }
    truncate(pin, now_);
    std::int64_t t = now_;
    std::vector<PendingFrame> frames;
    for (const auto& step : steps) {
        drive_[pin].push_back({t, t + step.duration_ms, {step.millivolts, 1}});
        frames.push_back({t, pin,
                          protocol::encode_command(
                              protocol::OutputVoltage{pin, step.millivolts, step.duration_ms})});
        t += step.duration_ms;
    }
    busy_until_[pin] = t;
    for (auto& f : frames) {
        auto pos = std::upper_bound(pending_.begin(), pending_.end(), f.at,
                                    [](std::int64_t at, const PendingFrame& p) { return at < p.at; });
        pending_.insert(pos, std::move(f));
    }
    advance_to(now_);
}

void SimDevice::stop(const PinId& pin) {
    std::lock_guard lock(mutex_);
    require_open();
    if (!pin.is_signal_out()) {
        fail(ErrorCode::UnknownPin, "'" + pin.name() + "' is not a signal-out pin");
    }
    truncate(pin, now_);
    busy_until_.erase(pin);
    std::erase_if(pending_, [&](const PendingFrame& f) { return f.pin == pin; });
    notify_frame(protocol::encode_command(protocol::OutputVoltage{pin, 0, std::nullopt}),
                 BoardResponse::success());
}

void SimDevice::wait(int ms) {
    std::lock_guard lock(mutex_);
    require_open();
    if (ms < 0) {
        fail(ErrorCode::InvalidArgument, "negative wait");
    }
    advance_to(now_ + ms);
}

std::optional<bool> SimDevice::floating(const PinId& pin) {
    std::lock_guard lock(mutex_);
    if (!pin.is_analog_in()) {
        fail(ErrorCode::UnknownPin, "'" + pin.name() + "' is not an analog-in pin");
    }
    return read_at(pin, now_).floating;
}

void SimDevice::close() {
    std::lock_guard lock(mutex_);
    open_ = false;
}

bool SimDevice::is_open() const {
    std::lock_guard lock(mutex_);
    return open_;
}

std::int64_t SimDevice::now_ms() const {
    std::lock_guard lock(mutex_);
    return now_;
}

LedPattern SimDevice::led(int row) const {
    std::lock_guard lock(mutex_);
    auto it = leds_.find(row);
    return it == leds_.end() ? LedPattern::Off : it->second;
}

std::map<int, LedPattern> SimDevice::led_rows() const {
    std::lock_guard lock(mutex_);
    return leds_;
}

int SimDevice::driven_mv(const PinId& pin) const {
    std::lock_guard lock(mutex_);
    const Rational level = level_at(pin, now_);
    return clamp_mv(round_div(level.num, level.den));
}

}  // namespace rowlight::device
