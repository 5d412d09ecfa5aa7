#include "net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>
#include <utility>

namespace droidpot::net {

namespace {

Endpoint endpoint_from_sockaddr(const sockaddr_storage& ss) {
    Endpoint ep;
    if (ss.ss_family == AF_INET) {
        const auto* a = reinterpret_cast<const sockaddr_in*>(&ss);
        ep.ip.family = IpAddr::Family::v4;
        std::memcpy(ep.ip.bytes.data(), &a->sin_addr, 4);
        ep.port = ntohs(a->sin_port);
    } else if (ss.ss_family == AF_INET6) {
        const auto* a = reinterpret_cast<const sockaddr_in6*>(&ss);
        ep.ip.family = IpAddr::Family::v6;
        std::memcpy(ep.ip.bytes.data(), &a->sin6_addr, 16);
        ep.port = ntohs(a->sin6_port);
    }
    return ep;
}

// Returns sockaddr length, 0 on parse failure.
socklen_t make_sockaddr(const std::string& addr, uint16_t port, sockaddr_storage* ss) {
    std::memset(ss, 0, sizeof *ss);
    auto ip = IpAddr::parse(addr);
    if (!ip) return 0;
    if (ip->family == IpAddr::Family::v4) {
        auto* a = reinterpret_cast<sockaddr_in*>(ss);
        a->sin_family = AF_INET;
        a->sin_port = htons(port);
        std::memcpy(&a->sin_addr, ip->bytes.data(), 4);
        return sizeof(sockaddr_in);
    }
    auto* a = reinterpret_cast<sockaddr_in6*>(ss);
    a->sin6_family = AF_INET6;
    a->sin6_port = htons(port);
    std::memcpy(&a->sin6_addr, ip->bytes.data(), 16);
    return sizeof(sockaddr_in6);
}

bool wait_readable(int fd, int timeout_ms) {
    pollfd pfd{fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, timeout_ms);
    return rc > 0 && (pfd.revents & (POLLIN | POLLHUP | POLLERR));
}

uint16_t bound_port(int fd) {
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    if (getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len) != 0) return 0;
    return endpoint_from_sockaddr(ss).port;
}

} // namespace

TcpConn::TcpConn(TcpConn&& o) noexcept : fd_(o.fd_), peer_(o.peer_) { o.fd_ = -1; }

TcpConn& TcpConn::operator=(TcpConn&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.fd_;
        peer_ = o.peer_;
        o.fd_ = -1;
    }
    return *this;
}

TcpConn::~TcpConn() { close(); }

void TcpConn::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

std::optional<TcpConn> TcpConn::connect(const std::string& host, uint16_t port, int timeout_ms) {
    sockaddr_storage ss{};
    socklen_t len = make_sockaddr(host, port, &ss);
    if (len == 0) return std::nullopt;
    int fd = ::socket(ss.ss_family, SOCK_STREAM, 0);
    if (fd < 0) return std::nullopt;

    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&ss), len);
    if (rc != 0 && errno != EINPROGRESS) {
        ::close(fd);
        return std::nullopt;
    }
    if (rc != 0) {
        pollfd pfd{fd, POLLOUT, 0};
        if (::poll(&pfd, 1, timeout_ms) <= 0) {
            ::close(fd);
            return std::nullopt;
        }
        int err = 0;
        socklen_t elen = sizeof err;
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &elen);
        if (err != 0) {
            ::close(fd);
            return std::nullopt;
        }
    }
    fcntl(fd, F_SETFL, flags);
    Endpoint peer;
    peer.ip = IpAddr::parse(host).value_or(IpAddr{});
    peer.port = port;
    return TcpConn(fd, peer);
}

int TcpConn::read_some(char* buf, size_t cap, int timeout_ms) {
    if (fd_ < 0) return kError;
    if (!wait_readable(fd_, timeout_ms)) return kTimeout;
    ssize_t n = ::recv(fd_, buf, cap, 0);
    if (n < 0) return errno == EINTR ? kTimeout : kError;
    return static_cast<int>(n);
}

bool TcpConn::write_all(std::string_view data) {
    const char* p = data.data();
    size_t left = data.size();
    while (left > 0) {
        ssize_t n = ::send(fd_, p, left, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        p += n;
        left -= static_cast<size_t>(n);
    }
    return true;
}

void TcpConn::shutdown_send() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

Endpoint TcpConn::local() const {
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    if (fd_ >= 0 && getsockname(fd_, reinterpret_cast<sockaddr*>(&ss), &len) == 0)
        return endpoint_from_sockaddr(ss);
    return {};
}

TcpListener::TcpListener(TcpListener&& o) noexcept : fd_(o.fd_), local_port_(o.local_port_) {
    o.fd_ = -1;
}

TcpListener& TcpListener::operator=(TcpListener&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.fd_;
        local_port_ = o.local_port_;
        o.fd_ = -1;
    }
    return *this;
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

bool TcpListener::open(const std::string& bind_addr, uint16_t port, std::string* error) {
    sockaddr_storage ss{};
    socklen_t len = make_sockaddr(bind_addr, port, &ss);
    if (len == 0) {
        if (error) *error = "bad bind address: " + bind_addr;
        return false;
    }
    fd_ = ::socket(ss.ss_family, SOCK_STREAM, 0);
    if (fd_ < 0) {
        if (error) *error = std::strerror(errno);
        return false;
    }
    int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&ss), len) != 0 || ::listen(fd_, 64) != 0) {
        if (error) *error = bind_addr + ":" + std::to_string(port) + ": " + std::strerror(errno);
        close();
        return false;
    }
    local_port_ = bound_port(fd_);
    return true;
}

std::optional<TcpConn> TcpListener::accept(int timeout_ms) {
    if (fd_ < 0) return std::nullopt;
    if (!wait_readable(fd_, timeout_ms)) return std::nullopt;
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    int cfd = ::accept(fd_, reinterpret_cast<sockaddr*>(&ss), &len);
    if (cfd < 0) return std::nullopt;
    return TcpConn(cfd, endpoint_from_sockaddr(ss));
}

UdpSocket::UdpSocket(UdpSocket&& o) noexcept : fd_(o.fd_), local_port_(o.local_port_) {
    o.fd_ = -1;
}

UdpSocket& UdpSocket::operator=(UdpSocket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.fd_;
        local_port_ = o.local_port_;
        o.fd_ = -1;
    }
    return *this;
}

UdpSocket::~UdpSocket() { close(); }

void UdpSocket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

bool UdpSocket::open(const std::string& bind_addr, uint16_t port, std::string* error) {
    sockaddr_storage ss{};
    socklen_t len = make_sockaddr(bind_addr, port, &ss);
    if (len == 0) {
        if (error) *error = "bad bind address: " + bind_addr;
        return false;
    }
    fd_ = ::socket(ss.ss_family, SOCK_DGRAM, 0);
    if (fd_ < 0) {
        if (error) *error = std::strerror(errno);
        return false;
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&ss), len) != 0) {
        if (error) *error = bind_addr + ":" + std::to_string(port) + ": " + std::strerror(errno);
        close();
        return false;
    }
    local_port_ = bound_port(fd_);
    return true;
}

std::optional<Datagram> UdpSocket::recv(int timeout_ms, size_t max_size) {
    if (fd_ < 0) return std::nullopt;
    if (!wait_readable(fd_, timeout_ms)) return std::nullopt;
    std::string buf(max_size, '\0');
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&ss), &len);
    if (n < 0) return std::nullopt;
    buf.resize(static_cast<size_t>(n));
    return Datagram{std::move(buf), endpoint_from_sockaddr(ss)};
}

bool UdpSocket::send_to(const Endpoint& peer, std::string_view data) {
    if (fd_ < 0) return false;
    sockaddr_storage ss{};
    socklen_t len = make_sockaddr(peer.ip.to_string(), peer.port, &ss);
    if (len == 0) return false;
    ssize_t n =
        ::sendto(fd_, data.data(), data.size(), 0, reinterpret_cast<sockaddr*>(&ss), len);
    return n == static_cast<ssize_t>(data.size());
}

void WorkerGroup::launch(std::function<void()> fn) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        active_++;
    }
    std::thread([this, fn = std::move(fn)] {
        fn();
        std::lock_guard<std::mutex> lock(mu_);
        active_--;
        cv_.notify_all();
    }).detach();
}

bool WorkerGroup::wait_idle(int timeout_ms) {
    std::unique_lock<std::mutex> lock(mu_);
    return cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms),
                        [this] { return active_ == 0; });
}

int WorkerGroup::active() const {
    std::lock_guard<std::mutex> lock(mu_);
    return active_;
}

LineReader::Status LineReader::read_line(std::string* line, int timeout_ms) {
    line->clear();
    while (true) {
        auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            *line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line->empty() && line->back() == '\r') line->pop_back();
            // Drop telnet IAC sequences (IAC cmd [opt]).
            std::string clean;
            clean.reserve(line->size());
            for (size_t i = 0; i < line->size(); i++) {
                auto c = static_cast<unsigned char>((*line)[i]);
                if (c == 255 && i + 1 < line->size()) {
                    auto cmd = static_cast<unsigned char>((*line)[i + 1]);
                    i += (cmd >= 251 && cmd <= 254) ? 2 : 1;
                    continue;
                }
                clean.push_back(static_cast<char>(c));
            }
            *line = std::move(clean);
            if (line->size() > max_line_) {
                line->resize(max_line_);
                return Status::overlong;
            }
            return Status::ok;
        }
        if (buffer_.size() > max_line_ + 2) {
            *line = buffer_.substr(0, max_line_);
            buffer_.clear();
            return Status::overlong;
        }
        char chunk[4096];
        int n = stream_.read_some(chunk, sizeof chunk, timeout_ms);
        if (n == 0) return Status::eof;
        if (n == ByteStream::kTimeout) return Status::timeout;
        if (n < 0) return Status::error;
        buffer_.append(chunk, static_cast<size_t>(n));
    }
}

} // namespace droidpot::net
