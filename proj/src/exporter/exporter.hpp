#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "core/clock.hpp"
#include "net/socket.hpp"

namespace droidpot::exporter {

// One sealed interval of event-log lines. Immutable once sealed; events are
// in event_id order (the order they appear in the log).
struct ExportBatch {
    uint64_t batch_id = 0;
    std::string vantage;
    uint64_t count = 0;
    std::string checksum; // sha-256 hex of payload
    std::string payload;  // event lines, each '\n'-terminated
};

std::string payload_checksum(const std::string& payload);

// Wire frame: 4-byte big-endian body length, then one NDJSON header line
// {batch_id, vantage, count, checksum} followed by the payload lines.
// The ack is a single NDJSON line: {"ack": id} or {"nack": id, "reason": r}.
std::string encode_frame(const ExportBatch& batch);

struct FrameResult {
    enum class Status : uint8_t { ok, closed, timeout, malformed };
    Status status = Status::closed;
    ExportBatch batch;
    std::string error;
};
FrameResult read_frame(net::ByteStream& stream, int timeout_ms,
                       size_t max_frame = 256 * 1024 * 1024);

std::string encode_ack(uint64_t batch_id, bool ok, const std::string& reason = "");

struct Ack {
    bool ok = false;
    uint64_t batch_id = 0;
    std::string reason;
};
std::optional<Ack> parse_ack(const std::string& line);

struct ExporterConfig {
    std::string log_path;   // the daemon's event log
    std::string spool_dir;
    std::string vantage;
    std::string collector_host = "127.0.0.1";
    uint16_t collector_port = 7007;
    int interval_s = 300;
    uint64_t spool_cap_bytes = 1024ull * 1024 * 1024;
};

// Seals the event log into five-minute (configurable) batches, spools them,
// and delivers at-least-once to the collector; unacked batches are retried
// next interval in order. Batches survive daemon restarts via the spool.
class Exporter {
  public:
    Exporter(ExporterConfig config, Clock& clock);
    ~Exporter();

    bool open(std::string* error); // prepares spool dir + cursor recovery
    void start();                  // interval timer thread
    void stop();                   // final seal + delivery attempt

    struct CycleStats {
        uint64_t sealed_batch_id = 0;
        uint64_t sealed_events = 0;
        size_t delivered = 0;
        size_t pending = 0;
    };
    // One seal+deliver pass; the timer calls this, tests may too.
    CycleStats run_cycle();

    uint64_t overflow_drops() const { return overflow_drops_.load(); }
    size_t pending_batches() const;

  private:
    struct SpoolEntry {
        uint64_t batch_id;
        uint64_t end_offset;
        std::string path;
    };
    std::vector<SpoolEntry> list_spool() const;
    void persist_cursor();
    size_t deliver_pending();
    void enforce_spool_cap();

    ExporterConfig config_;
    Clock& clock_;
    bool opened_ = false;
    std::atomic<bool> stopping_{false};
    std::thread timer_;
    mutable std::mutex mu_;
    uint64_t next_batch_id_ = 1;
    uint64_t log_offset_ = 0;
    std::atomic<uint64_t> overflow_drops_{0};
};

} // namespace droidpot::exporter
