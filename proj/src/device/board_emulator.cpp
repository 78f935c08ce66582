#include "rowlight/error.hpp"
#include "rowlight/serial_device.hpp"

namespace rowlight::device {

BoardEmulator::BoardEmulator(std::shared_ptr<SimDevice> device, bool follow_wall_clock)
    : device_(std::move(device)),
      follow_wall_clock_(follow_wall_clock),
      started_(std::chrono::steady_clock::now()) {}

std::string BoardEmulator::handle_line(std::string_view line) {
    try {
        if (follow_wall_clock_) {
            const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - started_)
                                     .count();
            if (elapsed > device_->now_ms()) {
                device_->wait(static_cast<int>(elapsed - device_->now_ms()));
            }
        }
        const BoardCommand cmd = protocol::decode_command(line);
        protocol::validate_command(cmd);
        return protocol::encode_response(device_->execute(cmd));
    } catch (const Error& e) {
        return protocol::encode_response(BoardResponse::failure(wire_error_name(e.code())));
    }
}

void BoardEmulator::serve(ByteStream& stream) {
    for (;;) {
        std::optional<std::string> line;
        try {
            line = stream.read_line(std::chrono::milliseconds(60'000));
        } catch (const Error&) {
            return;
        }
        if (!line) {
            continue;
        }
        try {
            stream.write(handle_line(*line));
        } catch (const Error&) {
            return;
        }
    }
}

}  // namespace rowlight::device
