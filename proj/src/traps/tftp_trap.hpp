#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include "core/artifacts.hpp"
#include "core/flow.hpp"
#include "core/sink.hpp"
#include "net/socket.hpp"

namespace droidpot::tftp {

enum Opcode : uint16_t { kRrq = 1, kWrq = 2, kData = 3, kAck = 4, kError = 5 };

struct Transfer {
    std::string filename;
    std::string mode; // octet | netascii
    uint16_t last_block = 0;
    std::string data;
    TimestampMs last_activity = 0;
};

// Write-request transfers keyed by peer endpoint; entries expire when idle.
class TransferTable {
  public:
    explicit TransferTable(TimestampMs idle_ms = 30'000) : idle_ms_(idle_ms) {}

    Transfer* find(const std::string& peer_key);
    Transfer* insert(const std::string& peer_key, Transfer t);
    void erase(const std::string& peer_key);
    void sweep(TimestampMs now);
    size_t size() const { return transfers_.size(); }

  private:
    TimestampMs idle_ms_;
    std::map<std::string, Transfer> transfers_;
};

std::string make_error(uint16_t code, const std::string& message);
std::string make_ack(uint16_t block);

constexpr size_t kMaxTransferBytes = 16 * 1024 * 1024;
constexpr size_t kBlockSize = 512;

// Pure protocol step. RRQ is always "file not found" (nothing is served);
// WRQ/DATA capture the payload with in-order ACKs. Returns the reply
// datagram, if any; a finished transfer is moved into *completed.
std::optional<std::string> tftp_handle(const std::string& datagram, TransferTable& table,
                                       const std::string& peer_key, TimestampMs now,
                                       std::optional<Transfer>* completed);

struct TftpTrapConfig {
    std::string bind_addr = "0.0.0.0";
    uint16_t port = 6969;
};

class TftpTrap {
  public:
    TftpTrap(TftpTrapConfig config, EventSink& sink, ArtifactStore& artifacts, Clock& clock);
    ~TftpTrap();

    bool start(std::string* error);
    void stop();
    uint16_t port() const { return socket_.local_port(); }

  private:
    void serve_loop();

    TftpTrapConfig config_;
    EventSink& sink_;
    ArtifactStore& artifacts_;
    Clock& clock_;

    net::UdpSocket socket_;
    UdpFlowTable flows_;
    TransferTable transfers_;
    std::atomic<bool> stopping_{false};
    std::thread thread_;
};

} // namespace droidpot::tftp
