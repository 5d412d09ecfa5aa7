#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "core/ip.hpp"

namespace droidpot::net {

// Transport abstraction so trap logic can run over a fake in tests.
class ByteStream {
  public:
    virtual ~ByteStream() = default;
    // > 0: bytes read; 0: orderly close; kTimeout / kError otherwise.
    static constexpr int kTimeout = -1;
    static constexpr int kError = -2;
    virtual int read_some(char* buf, size_t cap, int timeout_ms) = 0;
    virtual bool write_all(std::string_view data) = 0;
    virtual void shutdown_send() {}
};

struct Endpoint {
    IpAddr ip;
    uint16_t port = 0;
    std::string to_string() const { return ip.to_string() + ":" + std::to_string(port); }
};

class TcpConn final : public ByteStream {
  public:
    TcpConn() = default;
    explicit TcpConn(int fd, Endpoint peer) : fd_(fd), peer_(peer) {}
    TcpConn(TcpConn&& o) noexcept;
    TcpConn& operator=(TcpConn&& o) noexcept;
    TcpConn(const TcpConn&) = delete;
    TcpConn& operator=(const TcpConn&) = delete;
    ~TcpConn();

    static std::optional<TcpConn> connect(const std::string& host, uint16_t port,
                                          int timeout_ms = 10'000);

    int read_some(char* buf, size_t cap, int timeout_ms) override;
    bool write_all(std::string_view data) override;
    void shutdown_send() override;
    void close();

    bool valid() const { return fd_ >= 0; }
    const Endpoint& peer() const { return peer_; }
    Endpoint local() const;

  private:
    int fd_ = -1;
    Endpoint peer_;
};

class TcpListener {
  public:
    TcpListener() = default;
    TcpListener(TcpListener&& o) noexcept;
    TcpListener& operator=(TcpListener&& o) noexcept;
    TcpListener(const TcpListener&) = delete;
    ~TcpListener();

    // bind_addr may be "0.0.0.0", "::", or a concrete address; port 0 picks
    // an ephemeral port (see local_port()).
    bool open(const std::string& bind_addr, uint16_t port, std::string* error);
    std::optional<TcpConn> accept(int timeout_ms);
    uint16_t local_port() const { return local_port_; }
    bool valid() const { return fd_ >= 0; }
    void close();

  private:
    int fd_ = -1;
    uint16_t local_port_ = 0;
};

struct Datagram {
    std::string data;
    Endpoint peer;
};

class UdpSocket {
  public:
    UdpSocket() = default;
    UdpSocket(UdpSocket&& o) noexcept;
    UdpSocket& operator=(UdpSocket&& o) noexcept;
    UdpSocket(const UdpSocket&) = delete;
    ~UdpSocket();

    bool open(const std::string& bind_addr, uint16_t port, std::string* error);
    std::optional<Datagram> recv(int timeout_ms, size_t max_size = 65536);
    bool send_to(const Endpoint& peer, std::string_view data);
    uint16_t local_port() const { return local_port_; }
    bool valid() const { return fd_ >= 0; }
    void close();

  private:
    int fd_ = -1;
    uint16_t local_port_ = 0;
};

// Detached per-connection workers with a shutdown rendezvous. Traps hand
// each accepted connection to launch(); stop paths call wait_idle().
class WorkerGroup {
  public:
    ~WorkerGroup() { wait_idle(5'000); }
    void launch(std::function<void()> fn);
    // Waits until all workers finished; returns false on timeout.
    bool wait_idle(int timeout_ms);
    int active() const;

  private:
    mutable std::mutex mu_;
    std::condition_variable cv_;
    int active_ = 0;
};

// Buffered line reader over a ByteStream. Strips CR before LF and filters
// telnet IAC command sequences so netcat and telnet clients both work.
class LineReader {
  public:
    explicit LineReader(ByteStream& stream, size_t max_line = 8192)
        : stream_(stream), max_line_(max_line) {}

    enum class Status { ok, eof, timeout, error, overlong };
    Status read_line(std::string* line, int timeout_ms);

  private:
    ByteStream& stream_;
    size_t max_line_;
    std::string buffer_;
};

} // namespace droidpot::net
