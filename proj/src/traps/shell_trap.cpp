#include "traps/shell_trap.hpp"

#include "vfs/overlay.hpp"

namespace droidpot::shell {

LoginOutcome handle_login(const std::string& username, const std::string& password,
                          const CredentialPolicy& policy, int attempt_index) {
    for (const auto& [user, pass] : policy.accepted)
        if (user == username && pass == password) return {LoginOutcome::Result::granted};
    if (policy.accept_after_attempts > 0 && attempt_index >= policy.accept_after_attempts)
        return {LoginOutcome::Result::granted_by_attempt_quota};
    return {LoginOutcome::Result::rejected};
}

ShellTrap::ShellTrap(ShellTrapConfig config, EventSink& sink, SessionRegistry& sessions,
                     ArtifactStore& artifacts, std::shared_ptr<const vfs::FsImage> base,
                     Fetcher& fetcher, Clock& clock)
    : config_(std::move(config)), sink_(sink), sessions_(sessions), artifacts_(artifacts),
      base_(std::move(base)), fetcher_(fetcher), clock_(clock) {}

ShellTrap::~ShellTrap() { stop(); }

bool ShellTrap::start(std::string* error) {
    if (!listener_.open(config_.bind_addr, config_.port, error)) return false;
    stopping_ = false;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return true;
}

void ShellTrap::stop() {
    stopping_ = true;
    if (accept_thread_.joinable()) accept_thread_.join();
    listener_.close();
    workers_.wait_idle(5'000);
}

void ShellTrap::accept_loop() {
    while (!stopping_) {
        auto conn = listener_.accept(250);
        if (!conn) continue;
        workers_.launch([this, c = std::make_shared<net::TcpConn>(std::move(*conn))] {
            handle_connection(*c, c->peer());
        });
    }
}

void ShellTrap::handle_connection(net::ByteStream& stream, const net::Endpoint& peer) {
    ConnMeta meta;
    meta.transport = Transport::tcp;
    meta.src_ip = peer.ip;
    meta.src_port = peer.port;
    meta.dst_port = config_.port;
    meta.service = Service::shell;

    uint64_t sid = sessions_.allocate_session_id();
    AttackEvent event = sink_.record(meta, sid);
    auto session = sessions_.open_session(event, nullptr);
    if (!session) return;

    net::LineReader reader(stream, ShellInterpreter::kMaxLine);
    // Short poll slices keep shutdown responsive during idle sessions.
    auto read_line = [&](std::string* line) {
        int waited = 0;
        while (!stopping_ && waited < config_.idle_timeout_ms) {
            auto st = reader.read_line(line, 250);
            if (st == net::LineReader::Status::ok || st == net::LineReader::Status::overlong)
                return true;
            if (st != net::LineReader::Status::timeout) return false;
            waited += 250;
        }
        return false;
    };

    bool granted = false;
    int attempt = 0;
    while (!granted && attempt < config_.max_login_attempts && !stopping_) {
        stream.write_all(config_.interp.hostname + " login: ");
        std::string user;
        if (!read_line(&user)) break;
        stream.write_all("Password: ");
        std::string password;
        if (!read_line(&password)) break;
        attempt++;
        LoginOutcome outcome = handle_login(user, password, config_.policy, attempt);
        session->record_login(user, password,
                              outcome.result == LoginOutcome::Result::granted
                                  ? LoginAttempt::Outcome::granted
                                  : outcome.result == LoginOutcome::Result::granted_by_attempt_quota
                                        ? LoginAttempt::Outcome::granted_by_attempt_quota
                                        : LoginAttempt::Outcome::rejected);
        if (outcome.granted()) {
            granted = true;
            break;
        }
        stream.write_all("Login incorrect\r\n");
    }

    if (granted) {
        vfs::OverlayFs overlay(base_);
        ShellInterpreter interp(overlay, artifacts_, fetcher_, config_.interp, clock_, session);
        while (!stopping_) {
            stream.write_all(interp.prompt());
            std::string line;
            if (!read_line(&line)) break;
            CommandResult r = interp.interpret(line);
            if (!r.output.empty()) stream.write_all(r.output + "\r\n");
            if (r.exit_requested) break;
        }
    }
    session->close();
}

} // namespace droidpot::shell
