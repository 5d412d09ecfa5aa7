#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "core/artifacts.hpp"
#include "core/ndjson_log.hpp"
#include "core/session.hpp"
#include "core/sink.hpp"
#include "net/socket.hpp"
#include "traps/http.hpp"
#include "vfs/image.hpp"
#include "vfs/overlay.hpp"

namespace droidpot::web {

struct WebTrapConfig {
    std::string bind_addr = "0.0.0.0";
    uint16_t port = 8080;
    int idle_timeout_ms = 30'000;
    int max_requests_per_conn = 64;
};

// One line per request: ts, src, method, path, query, selected headers,
// body size, response status, traversal flag.
using RequestLog = NdjsonLog;

// HTTP honeypot: media-server index, upload form whose files land in the
// simulated phone filesystem, fake admin login that records credentials,
// verbose 404s. Every connection is one attack event.
class WebTrap {
  public:
    WebTrap(WebTrapConfig config, EventSink& sink, SessionRegistry& sessions,
            ArtifactStore& artifacts, std::shared_ptr<const vfs::FsImage> base, Clock& clock,
            RequestLog* request_log);
    ~WebTrap();

    bool start(std::string* error);
    void stop();
    uint16_t port() const { return listener_.local_port(); }

    void handle_connection(net::ByteStream& stream, const net::Endpoint& peer);

  private:
    struct RequestOutcome {
        int status = 200;
        std::string response;
        bool traversal_attempt = false;
        uint64_t upload_bytes = 0;
    };
    RequestOutcome route(const HttpRequest& req, vfs::OverlayFs& overlay,
                         std::shared_ptr<SessionHandle> session);
    void accept_loop();

    WebTrapConfig config_;
    EventSink& sink_;
    SessionRegistry& sessions_;
    ArtifactStore& artifacts_;
    std::shared_ptr<const vfs::FsImage> base_;
    Clock& clock_;
    RequestLog* request_log_;

    net::TcpListener listener_;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    net::WorkerGroup workers_;
};

} // namespace droidpot::web
