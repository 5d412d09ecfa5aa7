#include "core/sink.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "exporter/wire.hpp"

namespace droidpot {

std::optional<ExclusionSet> ExclusionSet::parse(const std::vector<std::string>& prefixes,
                                                std::vector<std::string>* errors) {
    ExclusionSet out;
    bool ok = true;
    for (const auto& text : prefixes) {
        auto cidr = Cidr::parse(text);
        if (!cidr) {
            ok = false;
            if (errors) errors->push_back("malformed exclusion prefix: \"" + text + "\"");
            continue;
        }
        out.prefixes_.push_back(*cidr);
    }
    if (!ok) return std::nullopt;
    return out;
}

bool ExclusionSet::contains(const IpAddr& ip) const {
    for (const auto& p : prefixes_)
        if (p.contains(ip)) return true;
    return false;
}

EventSink::EventSink(Vantage vantage, ExclusionSet exclusion, Clock& clock)
    : vantage_(std::move(vantage)), exclusion_(std::move(exclusion)), clock_(clock) {}

EventSink::~EventSink() { close(); }

bool EventSink::open(const std::string& path, std::string* error) {
    std::lock_guard<std::mutex> lock(mu_);
    if (fd_ >= 0) return true;

    // Resume pass: quarantine a partial trailing line, find the last id.
    std::ifstream in(path, std::ios::binary);
    if (in) {
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        size_t keep = content.size();
        auto last_nl = content.rfind('\n');
        if (last_nl == std::string::npos)
            keep = 0;
        else if (last_nl + 1 != content.size())
            keep = last_nl + 1;
        if (keep != content.size()) {
            std::ofstream q(path + ".quarantine", std::ios::app | std::ios::binary);
            q << content.substr(keep) << "\n";
            q.close();
            if (truncate(path.c_str(), static_cast<off_t>(keep)) != 0) {
                if (error) *error = path + ": truncate failed: " + std::strerror(errno);
                return false;
            }
            content.resize(keep);
        }
        size_t pos = 0;
        while (pos < content.size()) {
            auto nl = content.find('\n', pos);
            if (nl == std::string::npos) break;
            auto parsed = wire::parse_event(content.substr(pos, nl - pos));
            if (parsed && parsed->event_id >= next_id_) next_id_ = parsed->event_id + 1;
            pos = nl + 1;
        }
    }

    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) {
        if (error) *error = path + ": " + std::strerror(errno);
        return false;
    }
    path_ = path;
    flush_buffered_locked();
    return true;
}

void EventSink::close() {
    std::lock_guard<std::mutex> lock(mu_);
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

bool EventSink::is_open() const {
    std::lock_guard<std::mutex> lock(mu_);
    return fd_ >= 0;
}

AttackEvent EventSink::record(const ConnMeta& meta, std::optional<uint64_t> session_id) {
    std::lock_guard<std::mutex> lock(mu_);
    AttackEvent e;
    e.event_id = next_id_++;
    e.timestamp = clock_.now_ms();
    e.vantage = vantage_;
    e.transport = meta.transport;
    e.src_ip = meta.src_ip;
    e.src_port = meta.src_port;
    e.dst_port = meta.dst_port;
    e.service = meta.service;
    e.session_id = session_id;
    e.payload_bytes = meta.payload_bytes;
    e.excluded = exclusion_.contains(meta.src_ip);

    std::string line = wire::serialize_event(e);
    line.push_back('\n');
    if (fd_ >= 0) {
        write_line(line);
    } else {
        if (buffered_.size() >= kClosedBufferCap) {
            buffered_.pop_front();
            dropped_++;
        }
        buffered_.push_back(std::move(line));
    }
    return e;
}

bool EventSink::write_line(const std::string& line) {
    const char* p = line.data();
    size_t left = line.size();
    while (left > 0) {
        ssize_t n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        p += n;
        left -= static_cast<size_t>(n);
    }
    return true;
}

void EventSink::flush_buffered_locked() {
    while (!buffered_.empty()) {
        write_line(buffered_.front());
        buffered_.pop_front();
    }
}

uint64_t EventSink::last_event_id() const {
    std::lock_guard<std::mutex> lock(mu_);
    return next_id_ - 1;
}

uint64_t EventSink::dropped_while_closed() const {
    std::lock_guard<std::mutex> lock(mu_);
    return dropped_;
}

} // namespace droidpot
