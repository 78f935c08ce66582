#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <termios.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "rowlight/error.hpp"
#include "rowlight/serial_device.hpp"

namespace rowlight::device {

namespace {

[[noreturn]] void gone(const std::string& what) {
    fail(ErrorCode::DeviceGone, what + ": " + std::strerror(errno));
}

speed_t baud_constant(int baud) {
    switch (baud) {
        case 9600: return B9600;
        case 19200: return B19200;
        case 38400: return B38400;
        case 57600: return B57600;
        case 115200: return B115200;
        case 230400: return B230400;
        default: fail(ErrorCode::ConfigInvalid, "unsupported baud rate " + std::to_string(baud));
    }
}

}  // namespace

FdStream::FdStream(int fd) : read_fd_(fd), write_fd_(fd) {}

FdStream::FdStream(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

FdStream::~FdStream() { close(); }

void FdStream::close() {
    if (read_fd_ >= 0) {
        ::close(read_fd_);
    }
    if (write_fd_ >= 0 && write_fd_ != read_fd_) {
        ::close(write_fd_);
    }
    read_fd_ = write_fd_ = -1;
}

void FdStream::write(std::string_view bytes) {
    if (write_fd_ < 0) {
        fail(ErrorCode::DeviceGone, "stream closed");
    }
    while (!bytes.empty()) {
        const ssize_t n = ::send(write_fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == ENOTSOCK) {
            const ssize_t m = ::write(write_fd_, bytes.data(), bytes.size());
            if (m < 0) {
                if (errno == EINTR) {
                    continue;
                }
                gone("write failed");
            }
            bytes.remove_prefix(static_cast<std::size_t>(m));
            continue;
        }
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            gone("send failed");
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

std::optional<std::string> FdStream::read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl + 1);
            buffer_.erase(0, nl + 1);
            return line;
        }
        if (read_fd_ < 0) {
            fail(ErrorCode::DeviceGone, "stream closed");
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() < 0) {
            return std::nullopt;
        }
        pollfd pfd{read_fd_, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (rc < 0) {
            if (errno == EINTR) {
                continue;
            }
            gone("poll failed");
        }
        if (rc == 0) {
            return std::nullopt;
        }
        char chunk[512];
        const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) {
                continue;
            }
            gone("read failed");
        }
        if (n == 0) {
            fail(ErrorCode::DeviceGone, "peer closed the stream");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::unique_ptr<ByteStream> open_serial_port(const std::string& path, int baud) {
    const int fd = ::open(path.c_str(), O_RDWR | O_NOCTTY | O_CLOEXEC);
    if (fd < 0) {
        gone("cannot open " + path);
    }
    termios tio{};
    if (::tcgetattr(fd, &tio) == 0) {
        ::cfmakeraw(&tio);
        ::cfsetispeed(&tio, baud_constant(baud));
        ::cfsetospeed(&tio, baud_constant(baud));
        tio.c_cflag |= CLOCAL | CREAD;
        ::tcsetattr(fd, TCSANOW, &tio);
    }
    return std::make_unique<FdStream>(fd);
}

std::unique_ptr<ByteStream> connect_tcp(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
        fail(ErrorCode::DeviceGone, "cannot resolve " + host);
    }
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) {
            continue;
        }
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            break;
        }
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) {
        gone("cannot connect to " + host + ":" + std::to_string(port));
    }
    return std::make_unique<FdStream>(fd);
}

std::unique_ptr<ByteStream> open_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (endpoint.find('/') == std::string::npos && colon != std::string::npos) {
        return connect_tcp(endpoint.substr(0, colon), std::stoi(endpoint.substr(colon + 1)));
    }
    return open_serial_port(endpoint);
}

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_stream_pair() {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
        gone("socketpair failed");
    }
    return {std::make_unique<FdStream>(fds[0]), std::make_unique<FdStream>(fds[1])};
}

}  // namespace rowlight::device
