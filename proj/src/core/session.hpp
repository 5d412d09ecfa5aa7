#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "core/clock.hpp"
#include "core/model.hpp"

namespace droidpot {

class SessionRegistry;

// Live recording handle for one session. All appends go through here; the
// transcript becomes immutable (and is logged) on close().
class SessionHandle {
  public:
    void record_login(const std::string& user, const std::string& password,
                      LoginAttempt::Outcome outcome);
    void record_command(const std::string& input, const std::string& output, int exit_status);
    void record_artifact(const std::string& digest);
    void close();

    uint64_t session_id() const { return transcript_.session_id; }
    bool closed() const;

  private:
    friend class SessionRegistry;
    SessionHandle(SessionRegistry* owner, SessionTranscript initial)
        : owner_(owner), transcript_(std::move(initial)) {}

    SessionRegistry* owner_;
    mutable std::mutex mu_;
    SessionTranscript transcript_;
    bool closed_ = false;
};

// Tracks open sessions and archives closed transcripts, one NDJSON object
// per closed session when a log path is configured.
class SessionRegistry {
  public:
    explicit SessionRegistry(Clock& clock) : clock_(clock) {}

    bool open_log(const std::string& path, std::string* error);

    // Only terminal/web/FTP sessions have transcripts. Uses the event's
    // session_id when present (must be fresh), otherwise allocates one.
    std::shared_ptr<SessionHandle> open_session(const AttackEvent& event, std::string* error);

    uint64_t allocate_session_id();

    // Closed sessions only.
    std::optional<SessionTranscript> transcript(uint64_t session_id) const;

    // Daemon shutdown: closes every open session with an end instant.
    void close_all();

    size_t open_count() const;
    size_t closed_count() const;

  private:
    friend class SessionHandle;
    void finalize(uint64_t session_id, const SessionTranscript& t);

    Clock& clock_;
    mutable std::mutex mu_;
    uint64_t next_session_id_ = 1;
    std::string log_path_;
    std::unordered_map<uint64_t, std::shared_ptr<SessionHandle>> open_;
    std::unordered_map<uint64_t, SessionTranscript> closed_;
};

// Serialization used for the transcript log and by the sim harness.
std::string transcript_to_json(const SessionTranscript& t);
std::optional<SessionTranscript> transcript_from_json(const std::string& line);

} // namespace droidpot
