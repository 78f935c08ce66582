#include "rowlight/session_log.hpp"

#include "rowlight/error.hpp"

namespace rowlight::service {

using nlohmann::json;

LogWriter::LogWriter(const std::filesystem::path& path) : path_(path) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) {
        fail(ErrorCode::IoError, "cannot open session log " + path.string());
    }
}

void LogWriter::append(const agent::SessionLogRecord& record) {
    const std::string line = agent::record_to_json(record).dump() + "\n";
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
    if (!out_) {
        fail(ErrorCode::IoError, "write to " + path_.string() + " failed");
    }
}

Replayed replay_stream(std::istream& in, const RecordCallback& on_record) {
    Replayed out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (in.eof()) {
            out.torn_tail = !line.empty();
            break;
        }
        out.valid_bytes += line.size() + 1;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            fail(ErrorCode::LogCorrupt, "line " + std::to_string(line_no) + " is not JSON");
        }
        const agent::SessionLogRecord record = agent::record_from_json(j);
        if (record.seq != out.last_seq + 1) {
            fail(ErrorCode::LogCorrupt, "line " + std::to_string(line_no) + ": expected seq " +
                                            std::to_string(out.last_seq + 1) + ", found " +
                                            std::to_string(record.seq));
        }
        try {
            agent::apply(out.state, record.event);
        } catch (const Error& e) {
            fail(ErrorCode::LogCorrupt,
                 "record " + std::to_string(record.seq) + " does not apply: " + e.what());
        }
        out.last_seq = record.seq;
        if (on_record) {
            on_record(record);
        }
    }
    return out;
}

Replayed replay_file(const std::filesystem::path& path, const RecordCallback& on_record) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open session log " + path.string());
    }
    return replay_stream(in, on_record);
}

std::string format_sse(const StreamEvent& event) {
    return "id: " + std::to_string(event.seq) + "\nevent: " + event.type + "\ndata: " + event.data +
           "\n\n";
}

EventHub::EventHub(std::size_t history_limit) : limit_(history_limit) {}

void EventHub::publish(const agent::SessionLogRecord& record) {
    StreamEvent e{record.seq, std::string(agent::event_type(record.event)),
                  agent::event_data(record.event).dump()};
    {
        std::lock_guard g(mutex_);
        history_.push_back(std::move(e));
        while (history_.size() > limit_) {
            history_.pop_front();
        }
    }
    cv_.notify_all();
}

std::vector<StreamEvent> EventHub::events_after(std::int64_t after_seq,
                                                std::chrono::milliseconds wait) {
    std::unique_lock lk(mutex_);
    auto ready = [&] { return closed_ || (!history_.empty() && history_.back().seq > after_seq); };
    cv_.wait_for(lk, wait, ready);
    std::vector<StreamEvent> out;
    for (const auto& e : history_) {
        if (e.seq > after_seq) {
            out.push_back(e);
        }
    }
    return out;
}

void EventHub::close() {
    {
        std::lock_guard g(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool EventHub::closed() const {
    std::lock_guard g(mutex_);
    return closed_;
}

}  // namespace rowlight::service
