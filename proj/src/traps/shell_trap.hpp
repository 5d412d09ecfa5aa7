#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "core/artifacts.hpp"
#include "core/session.hpp"
#include "core/sink.hpp"
#include "net/socket.hpp"
#include "traps/fetcher.hpp"
#include "traps/interpreter.hpp"
#include "vfs/image.hpp"

namespace droidpot::shell {

// Trivial-password policy. With accept_after_attempts = n > 0 the n-th
// failed attempt on a connection succeeds regardless of password.
struct CredentialPolicy {
    std::vector<std::pair<std::string, std::string>> accepted = {{"root", "1234"},
                                                                 {"root", "root"}};
    int accept_after_attempts = 3; // 0 disables the quota
};

struct LoginOutcome {
    enum class Result : uint8_t { granted, rejected, granted_by_attempt_quota };
    Result result = Result::rejected;
    bool granted() const { return result != Result::rejected; }
};

// attempt_index counts from 1 per connection.
LoginOutcome handle_login(const std::string& username, const std::string& password,
                          const CredentialPolicy& policy, int attempt_index);

struct ShellTrapConfig {
    std::string bind_addr = "0.0.0.0";
    uint16_t port = 2222;
    CredentialPolicy policy;
    InterpreterConfig interp;
    int idle_timeout_ms = 300'000;
    int max_login_attempts = 10; // hard per-connection cap
};

// Terminal honeypot: telnet-style login prompt over plain TCP, emulated
// root shell per session. The interpreter is transport-agnostic; this class
// only owns sockets and session wiring.
class ShellTrap {
  public:
    ShellTrap(ShellTrapConfig config, EventSink& sink, SessionRegistry& sessions,
              ArtifactStore& artifacts, std::shared_ptr<const vfs::FsImage> base,
              Fetcher& fetcher, Clock& clock);
    ~ShellTrap();

    bool start(std::string* error);
    void stop();
    uint16_t port() const { return listener_.local_port(); }

    // One full session over an established stream; used by the socket loop
    // and directly by tests.
    void handle_connection(net::ByteStream& stream, const net::Endpoint& peer);

  private:
    void accept_loop();

    ShellTrapConfig config_;
    EventSink& sink_;
    SessionRegistry& sessions_;
    ArtifactStore& artifacts_;
    std::shared_ptr<const vfs::FsImage> base_;
    Fetcher& fetcher_;
    Clock& clock_;

    net::TcpListener listener_;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    net::WorkerGroup workers_;
};

} // namespace droidpot::shell
