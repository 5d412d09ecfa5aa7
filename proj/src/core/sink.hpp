#pragma once

#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "core/clock.hpp"
#include "core/ip.hpp"
#include "core/model.hpp"

namespace droidpot {

// Configured collector/management addresses. Events from these sources are
// flagged excluded but still recorded; filtering happens at analysis time.
class ExclusionSet {
  public:
    ExclusionSet() = default;

    // Parses a list of addresses/CIDR prefixes. On failure returns nullopt
    // and appends one message per malformed entry.
    static std::optional<ExclusionSet> parse(const std::vector<std::string>& prefixes,
                                             std::vector<std::string>* errors);

    bool contains(const IpAddr& ip) const;
    size_t size() const { return prefixes_.size(); }

  private:
    std::vector<Cidr> prefixes_;
};

inline bool is_excluded(const IpAddr& src_ip, const ExclusionSet& set) {
    return set.contains(src_ip);
}

// Append-only newline-delimited JSON event log. Many producers, one writer:
// the mutex covers id assignment and the write, so on-disk order equals
// event_id order and a crash can lose at most the in-flight line.
class EventSink {
  public:
    EventSink(Vantage vantage, ExclusionSet exclusion, Clock& clock);
    ~EventSink();

    // Opens (creating if needed) the log. A partial trailing line left by a
    // crash is moved to <path>.quarantine and ids resume after the last
    // intact line.
    bool open(const std::string& path, std::string* error);
    void close();
    bool is_open() const;

    // Appends one event with the next event_id; the excluded flag is
    // computed from the exclusion set. While the sink is closed the event is
    // buffered (bounded; oldest dropped with a counter).
    AttackEvent record(const ConnMeta& meta, std::optional<uint64_t> session_id = std::nullopt);

    uint64_t last_event_id() const;
    uint64_t dropped_while_closed() const;
    const std::string& path() const { return path_; }
    const Vantage& vantage() const { return vantage_; }
    const ExclusionSet& exclusion() const { return exclusion_; }

    static constexpr size_t kClosedBufferCap = 4096;

  private:
    bool write_line(const std::string& line);
    void flush_buffered_locked();

    Vantage vantage_;
    ExclusionSet exclusion_;
    Clock& clock_;

    mutable std::mutex mu_;
    int fd_ = -1;
    std::string path_;
    uint64_t next_id_ = 1;
    uint64_t dropped_ = 0;
    std::deque<std::string> buffered_;
};

} // namespace droidpot
