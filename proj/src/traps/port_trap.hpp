#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "core/artifacts.hpp"
#include "core/flow.hpp"
#include "core/ndjson_log.hpp"
#include "core/sink.hpp"
#include "net/socket.hpp"

namespace droidpot::porttrap {

enum class TrapMode : uint8_t { silent, echo, banner };

const char* to_string(TrapMode m);

struct PortPolicy {
    TrapMode mode = TrapMode::silent;
    std::string banner; // banner mode only
};

struct TrapPolicy {
    std::map<uint16_t, PortPolicy> tcp_ports;
    std::map<uint16_t, PortPolicy> udp_ports;
};

struct PayloadCapture {
    std::string stored; // first 64 KiB
    uint64_t total_bytes = 0;
    bool blind_send = false;
    int64_t duration_ms = 0;
};

constexpr size_t kCaptureCap = 64 * 1024;

// Runs one trapped TCP connection over the stream: banner mode speaks
// first, echo mirrors, silent never transmits. Returns the capture.
// blind_send is set only in silent mode when payload arrived unprompted.
PayloadCapture trap_connection_io(net::ByteStream& stream, const PortPolicy& policy,
                                  Clock& clock, int idle_timeout_ms, int max_total_ms,
                                  const std::atomic<bool>* stop = nullptr);

struct PortTrapConfig {
    std::string bind_addr = "0.0.0.0";
    TrapPolicy policy;
    int idle_timeout_ms = 30'000;
    int max_total_ms = 300'000;
};

// Catch-all trap: listens on every configured leftover port, records one
// event per connection/flow, and captures whatever arrives. Individual bind
// failures are reported but do not stop the rest.
class PortTrap {
  public:
    PortTrap(PortTrapConfig config, EventSink& sink, ArtifactStore& artifacts, Clock& clock,
             NdjsonLog* capture_log);
    ~PortTrap();

    // Returns true when at least one port is trapped; failed ports are
    // appended to *failed.
    bool start(std::vector<std::string>* failed);
    void stop();

    std::vector<uint16_t> bound_tcp_ports() const;
    std::vector<uint16_t> bound_udp_ports() const;

  private:
    struct UdpFlowState {
        uint64_t event_id = 0;
        PayloadCapture capture;
        TimestampMs first_seen = 0;
        TimestampMs last_seen = 0;
        TrapMode mode = TrapMode::silent;
        uint16_t dst_port = 0;
        std::string src;
    };

    void tcp_accept_loop(size_t idx);
    void udp_serve_loop(size_t idx);
    void handle_tcp(net::TcpConn& conn, uint16_t port, const PortPolicy& policy);
    void finalize_udp_flow(const UdpFlowState& flow);
    void log_capture(uint64_t event_id, Transport transport, const std::string& src,
                     uint16_t dst_port, TrapMode mode, const PayloadCapture& capture);

    PortTrapConfig config_;
    EventSink& sink_;
    ArtifactStore& artifacts_;
    Clock& clock_;
    NdjsonLog* capture_log_;

    struct TcpEntry {
        uint16_t port;
        PortPolicy policy;
        net::TcpListener listener;
    };
    struct UdpEntry {
        uint16_t port;
        PortPolicy policy;
        net::UdpSocket socket;
    };
    std::vector<std::unique_ptr<TcpEntry>> tcp_;
    std::vector<std::unique_ptr<UdpEntry>> udp_;
    std::vector<std::thread> threads_;
    net::WorkerGroup workers_;
    std::atomic<bool> stopping_{false};
};

} // namespace droidpot::porttrap
