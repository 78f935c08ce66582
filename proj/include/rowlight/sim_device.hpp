#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string_view>
#include <variant>
#include <vector>

#include "rowlight/device.hpp"

namespace rowlight::device {

using protocol::LedPattern;

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    bool operator==(const Rational&) const = default;
};

// Accepts "p/q", integers and plain decimals ("0.25"). Throws InvalidFixture.
Rational parse_ratio(std::string_view text);

struct TransferModel;

struct Constant {
    int millivolts = 0;
};

// Reads ratio × the level currently driven on a signal-out pin.
struct Divider {
    PinId source;
    Rational ratio;
};

// Adds a deterministic offset in [-amplitude, +amplitude] that depends only on
// the seed and the virtual time.
struct Noisy {
    std::shared_ptr<const TransferModel> base;
    int amplitude_mv = 0;
    std::uint64_t seed = 0;
};

// Unconnected input: reads 0 mV and reports itself as floating.
struct Open {};

struct TransferModel {
    std::variant<Constant, Divider, Noisy, Open> model;
};

struct PinBinding {
    PinId pin;
    TransferModel model;
};

/// The virtual circuit behind the simulated board's analog inputs. Inputs
/// without a binding are Open.
struct VirtualFixture {
    std::vector<PinBinding> pins;
};

struct SimOptions {
    // Virtual milliseconds consumed by each executed command.
    int latency_ms = 0;
    // Levels held on signal-out pins from t = 0, as if a bench supply were
    // connected before the session started. No frames are emitted for them.
    std::map<PinId, int> hold_mv;
};

struct FixtureFile {
    VirtualFixture fixture;
    SimOptions options;
};

// YAML: pins: {A0: {divider: {source: D0, ratio: "1/2"}}, A1: {constant: 2000},
//              A2: {noisy: {base: {constant: 1000}, amplitude: 50, seed: 7}}, A3: open}
//       latency_ms: 0   (optional)
//       hold: {D0: 5000} (optional)
FixtureFile parse_fixture_yaml(std::string_view yaml);
FixtureFile load_fixture_file(const std::string& path);

// Offset added by a Noisy model at virtual time t.
int noise_offset(std::uint64_t seed, std::int64_t t_ms, int amplitude_mv);

/// Deterministic board simulator on a virtual clock that advances only with
/// commands (by the configured latency), sampling, and wait().
class SimDevice final : public Device {
public:
    // Throws InvalidFixture.
    explicit SimDevice(VirtualFixture fixture, SimOptions options = {});

    BoardResponse execute(const BoardCommand& cmd) override;
    TimeSeries sample_series(const PinId& pin, int interval_ms, int duration_ms) override;
    void play_sequence(const PinId& pin, std::span<const SequenceStep> steps) override;
    void stop(const PinId& pin) override;
    void wait(int ms) override;
    std::optional<bool> floating(const PinId& pin) override;
    void close() override;
    bool is_open() const override;

    std::int64_t now_ms() const;
    LedPattern led(int row) const;
    std::map<int, LedPattern> led_rows() const;
    // Mean level currently driven on a signal-out pin.
    int driven_mv(const PinId& pin) const;

private:
    struct Segment {
        std::int64_t start;
        std::int64_t end;  // exclusive; INT64_MAX for a hold
        Rational level;
    };
    struct PendingFrame {
        std::int64_t at;
        PinId pin;
        std::string frame;
    };
    struct Reading {
        int millivolts;
        bool floating;
    };

    Reading evaluate(const TransferModel& model, std::int64_t t) const;
    Reading read_at(const PinId& pin, std::int64_t t) const;
    Rational level_at(const PinId& pin, std::int64_t t) const;
    void truncate(const PinId& pin, std::int64_t t);
    void advance_to(std::int64_t t);
    void require_open() const;
    bool busy(const PinId& pin) const;

    std::map<PinId, TransferModel> models_;
    SimOptions options_;

    mutable std::recursive_mutex mutex_;
    bool open_ = true;
    std::int64_t now_ = 0;
    std::map<int, LedPattern> leds_;
    std::map<PinId, std::vector<Segment>> drive_;
    std::map<PinId, std::int64_t> busy_until_;
    std::vector<PendingFrame> pending_;  // sorted by time, stable
};

std::shared_ptr<SimDevice> open_sim(VirtualFixture fixture, SimOptions options = {});

}  // namespace rowlight::device
