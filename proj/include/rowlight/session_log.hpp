#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <string>
#include <vector>

#include "rowlight/session_state.hpp"

namespace rowlight::service {

/// Append-only JSON-lines log; one record per line, flushed per record.
class LogWriter {
public:
    explicit LogWriter(const std::filesystem::path& path);  // IoError
    void append(const agent::SessionLogRecord& record);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

struct Replayed {
    agent::SessionState state;
    std::int64_t last_seq = 0;
    std::uint64_t valid_bytes = 0;  // length of the complete lines
    bool torn_tail = false;         // a final line without LF was ignored
};

// Seq must start at 1 and grow by one per line. A gap, an undecodable line or
// a record that cannot apply raises LogCorrupt. A record counts once its LF is
// written; an unterminated last line is a write cut short and is skipped.
// `on_record` sees each record after it applied.
using RecordCallback = std::function<void(const agent::SessionLogRecord&)>;
Replayed replay_stream(std::istream& in, const RecordCallback& on_record = {});
Replayed replay_file(const std::filesystem::path& path, const RecordCallback& on_record = {});

struct StreamEvent {
    std::int64_t seq = 0;
    std::string type;
    std::string data;  // compact JSON
};

// Server-sent event block: "id: <seq>\nevent: <type>\ndata: <json>\n\n".
std::string format_sse(const StreamEvent& event);

/// Per-session fan-out of records to any number of readers. Readers poll with
/// the last seq they saw, so every reader sees the records in seq order.
class EventHub {
public:
    explicit EventHub(std::size_t history_limit = 100000);

    void publish(const agent::SessionLogRecord& record);
    // Events with seq > after_seq; waits up to `wait` when none are ready.
    std::vector<StreamEvent> events_after(std::int64_t after_seq, std::chrono::milliseconds wait);
    void close();
    bool closed() const;

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<StreamEvent> history_;
    std::size_t limit_;
    bool closed_ = false;
};

}  // namespace rowlight::service
