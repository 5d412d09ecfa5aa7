#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "exporter/exporter.hpp"
#include "net/socket.hpp"

namespace droidpot::exporter {

struct CollectorConfig {
    std::string bind_addr = "0.0.0.0";
    uint16_t port = 7007;
    std::string out_dir = "collector-data";
};

// Bundled collector stub standing in for the upstream early-warning intake:
// verifies batch checksums, appends payloads to per-vantage archives, and
// deduplicates by (vantage, batch_id) so retries stay idempotent across
// restarts.
class Collector {
  public:
    Collector(CollectorConfig config);
    ~Collector();

    bool start(std::string* error);
    void stop();
    uint16_t port() const { return listener_.local_port(); }

    void handle_connection(net::TcpConn& conn);

    // For tests: batches accepted (including duplicates acked twice).
    uint64_t batches_acked() const { return acked_.load(); }
    uint64_t batches_nacked() const { return nacked_.load(); }

  private:
    void accept_loop();
    bool load_seen(std::string* error);
    bool seen(const std::string& vantage, uint64_t batch_id);
    void mark_seen(const std::string& vantage, uint64_t batch_id);

    CollectorConfig config_;
    net::TcpListener listener_;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    net::WorkerGroup workers_;

    std::mutex mu_;
    std::set<std::pair<std::string, uint64_t>> seen_;
    std::atomic<uint64_t> acked_{0};
    std::atomic<uint64_t> nacked_{0};
};

} // namespace droidpot::exporter
