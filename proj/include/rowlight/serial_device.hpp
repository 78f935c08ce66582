#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include "rowlight/device.hpp"
#include "rowlight/sim_device.hpp"

namespace rowlight::device {

/// Bidirectional byte stream carrying LF-framed text.
class ByteStream {
public:
    virtual ~ByteStream() = default;

    // Throws DeviceGone when the peer is gone.
    virtual void write(std::string_view bytes) = 0;

    // One line including its LF. nullopt on timeout; DeviceGone on EOF.
    virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;

    virtual void close() = 0;
};

/// Stream over POSIX file descriptors (tty, pipe, socket). Owns the fds.
class FdStream final : public ByteStream {
public:
    explicit FdStream(int fd);
    FdStream(int read_fd, int write_fd);
    ~FdStream() override;

    FdStream(const FdStream&) = delete;
    FdStream& operator=(const FdStream&) = delete;

    void write(std::string_view bytes) override;
    std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;
    void close() override;

private:
    int read_fd_;
    int write_fd_;
    std::string buffer_;
};

// Serial port in raw 8N1 mode.
std::unique_ptr<ByteStream> open_serial_port(const std::string& path, int baud = 115200);
std::unique_ptr<ByteStream> connect_tcp(const std::string& host, int port);
// "host:port" connects over TCP, anything else is treated as a serial port path.
std::unique_ptr<ByteStream> open_endpoint(const std::string& endpoint);
// Two connected in-process streams (a socketpair).
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_stream_pair();

struct SerialOptions {
    std::chrono::milliseconds response_timeout{1000};
};

/// Device backend that speaks the wire protocol over a byte stream. Timed
/// sequences are paced on wall time by one worker thread per pin.
class SerialDevice final : public Device {
public:
    explicit SerialDevice(std::unique_ptr<ByteStream> stream, SerialOptions options = {});
    ~SerialDevice() override;

    BoardResponse execute(const BoardCommand& cmd) override;
    TimeSeries sample_series(const PinId& pin, int interval_ms, int duration_ms) override;
    void play_sequence(const PinId& pin, std::span<const SequenceStep> steps) override;
    void stop(const PinId& pin) override;
    void wait(int ms) override;
    void close() override;
    bool is_open() const override;

private:
    using Clock = std::chrono::steady_clock;

    BoardResponse transact(const BoardCommand& cmd);
    bool busy(const PinId& pin);
    void cancel_worker(const PinId& pin);

    std::unique_ptr<ByteStream> stream_;
    SerialOptions options_;

    mutable std::mutex io_mutex_;  // one frame/response exchange at a time
    bool open_ = true;

    std::mutex state_mutex_;
    std::map<PinId, Clock::time_point> busy_until_;
    std::map<PinId, std::jthread> workers_;
};

/// Board side of the protocol: answers frames by executing them on a
/// simulated device. Serves as the firmware stand-in behind any byte stream.
class BoardEmulator {
public:
    // With follow_wall_clock the simulator's virtual clock is advanced to the
    // wall time elapsed since construction before each frame, so timed outputs
    // expire the way they would on hardware.
    explicit BoardEmulator(std::shared_ptr<SimDevice> device, bool follow_wall_clock = false);

    // Response frame for one command frame. Never throws; protocol and device
    // errors come back as {"ok":false,"error":...}.
    std::string handle_line(std::string_view line);

    // Serves until the stream reaches EOF.
    void serve(ByteStream& stream);

    SimDevice& device() { return *device_; }

private:
    std::shared_ptr<SimDevice> device_;
    bool follow_wall_clock_;
    std::chrono::steady_clock::time_point started_;
};

}  // namespace rowlight::device
