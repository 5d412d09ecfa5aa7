#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "core/artifacts.hpp"
#include "core/session.hpp"
#include "core/sink.hpp"
#include "net/socket.hpp"

namespace droidpot::ftp {

// Control-connection state. STOR is honored only when authed with an open
// passive data channel.
struct FtpSessionState {
    enum class Phase : uint8_t { greeting, need_pass, authed };
    Phase phase = Phase::greeting;
    std::string username;
    std::string cwd = "/";
    char transfer_type = 'I';
    bool data_channel_ready = false;
};

// Protocol step result. code/reply is the immediate answer; for deferred
// verbs (PASV/LIST/STOR) the driver opens sockets and sends 150/226/425
// itself.
struct StepOutcome {
    int code = 0;       // 0 = no immediate reply, action decides
    std::string reply;  // full line without CRLF
    enum class Action : uint8_t { none, open_pasv, list, stor, quit } action = Action::none;
    std::string arg;
};

extern const char* kGreeting; // sent on connect

// Pure: consumes one command line, updates state, never touches sockets.
StepOutcome ftp_step(FtpSessionState& state, const std::string& line);

struct FtpTrapConfig {
    std::string bind_addr = "0.0.0.0";
    uint16_t port = 2121;
    uint16_t pasv_min = 0; // 0 = ephemeral
    uint16_t pasv_max = 0;
    int idle_timeout_ms = 60'000;
    size_t max_upload = 16 * 1024 * 1024;
};

// Write-only FTP emulation: accepts any credentials, swallows STOR payloads
// into the artifact store, serves nothing real (LIST is always empty).
class FtpTrap {
  public:
    FtpTrap(FtpTrapConfig config, EventSink& sink, SessionRegistry& sessions,
            ArtifactStore& artifacts, Clock& clock);
    ~FtpTrap();

    bool start(std::string* error);
    void stop();
    uint16_t port() const { return listener_.local_port(); }

    void handle_connection(net::TcpConn& conn);

  private:
    void accept_loop();
    std::optional<net::TcpListener> open_pasv_listener();

    FtpTrapConfig config_;
    EventSink& sink_;
    SessionRegistry& sessions_;
    ArtifactStore& artifacts_;
    Clock& clock_;

    net::TcpListener listener_;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    net::WorkerGroup workers_;
};

} // namespace droidpot::ftp
