#include "traps/ftp_trap.hpp"

#include <algorithm>
#include <cstdio>

namespace droidpot::ftp {

const char* kGreeting = "220 FTP server ready.";

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(::toupper(c)); });
    return s;
}

} // namespace

StepOutcome ftp_step(FtpSessionState& state, const std::string& line) {
    if (line.size() > 1024) return {500, "500 Line too long.", StepOutcome::Action::none, ""};

    std::string verb, arg;
    auto sp = line.find(' ');
    if (sp == std::string::npos) {
        verb = upper(line);
    } else {
        verb = upper(line.substr(0, sp));
        arg = line.substr(sp + 1);
        while (!arg.empty() && (arg.back() == '\r' || arg.back() == '\n')) arg.pop_back();
    }

    if (verb == "QUIT") return {221, "221 Goodbye.", StepOutcome::Action::quit, ""};
    if (verb == "USER") {
        state.username = arg;
        state.phase = FtpSessionState::Phase::need_pass;
        return {331, "331 Password required for " + arg + ".", StepOutcome::Action::none, ""};
    }
    if (verb == "PASS") {
        if (state.phase != FtpSessionState::Phase::need_pass)
            return {503, "503 Login with USER first.", StepOutcome::Action::none, ""};
        state.phase = FtpSessionState::Phase::authed;
        // arg carries the password so the driver can record the credentials
        return {230, "230 User logged in.", StepOutcome::Action::none, arg};
    }
    if (verb == "SYST") return {215, "215 UNIX Type: L8", StepOutcome::Action::none, ""};

    static const char* kKnown[] = {"PWD", "CWD", "TYPE", "PASV", "LIST", "STOR"};
    bool known = std::find_if(std::begin(kKnown), std::end(kKnown), [&](const char* v) {
                     return verb == v;
                 }) != std::end(kKnown);
    if (!known) return {502, "502 Command not implemented.", StepOutcome::Action::none, ""};

    if (state.phase != FtpSessionState::Phase::authed)
        return {530, "530 Please login with USER and PASS.", StepOutcome::Action::none, ""};

    if (verb == "PWD")
        return {257, "257 \"" + state.cwd + "\" is the current directory.",
                StepOutcome::Action::none, ""};
    if (verb == "CWD") {
        if (arg.empty()) arg = "/";
        if (arg[0] == '/')
            state.cwd = arg;
        else if (state.cwd == "/")
            state.cwd = "/" + arg;
        else
            state.cwd = state.cwd + "/" + arg;
        return {250, "250 Directory changed.", StepOutcome::Action::none, ""};
    }
    if (verb == "TYPE") {
        if (!arg.empty()) state.transfer_type = static_cast<char>(::toupper(arg[0]));
        return {200, std::string("200 Type set to ") + state.transfer_type + ".",
                StepOutcome::Action::none, ""};
    }
    if (verb == "PASV") return {0, "", StepOutcome::Action::open_pasv, ""};
    if (verb == "LIST") {
        if (!state.data_channel_ready)
            return {425, "425 Use PASV first.", StepOutcome::Action::none, ""};
        return {0, "", StepOutcome::Action::list, arg};
    }
    // STOR
    if (!state.data_channel_ready)
        return {425, "425 Use PASV first.", StepOutcome::Action::none, ""};
    if (arg.empty()) return {501, "501 Missing file name.", StepOutcome::Action::none, ""};
    return {0, "", StepOutcome::Action::stor, arg};
}

FtpTrap::FtpTrap(FtpTrapConfig config, EventSink& sink, SessionRegistry& sessions,
                 ArtifactStore& artifacts, Clock& clock)
    : config_(std::move(config)), sink_(sink), sessions_(sessions), artifacts_(artifacts),
      clock_(clock) {}

FtpTrap::~FtpTrap() { stop(); }

bool FtpTrap::start(std::string* error) {
    if (!listener_.open(config_.bind_addr, config_.port, error)) return false;
    stopping_ = false;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return true;
}

void FtpTrap::stop() {
    stopping_ = true;
    if (accept_thread_.joinable()) accept_thread_.join();
    listener_.close();
    workers_.wait_idle(5'000);
}

void FtpTrap::accept_loop() {
    while (!stopping_) {
        auto conn = listener_.accept(250);
        if (!conn) continue;
        workers_.launch([this, c = std::make_shared<net::TcpConn>(std::move(*conn))] {
            handle_connection(*c);
        });
    }
}

std::optional<net::TcpListener> FtpTrap::open_pasv_listener() {
    net::TcpListener data;
    if (config_.pasv_min == 0) {
        if (data.open(config_.bind_addr, 0, nullptr)) return data;
        return std::nullopt;
    }
    for (uint16_t p = config_.pasv_min; p <= config_.pasv_max && p >= config_.pasv_min; p++) {
        if (data.open(config_.bind_addr, p, nullptr)) return data;
    }
    return std::nullopt;
}

void FtpTrap::handle_connection(net::TcpConn& conn) {
    ConnMeta meta;
    meta.transport = Transport::tcp;
    meta.src_ip = conn.peer().ip;
    meta.src_port = conn.peer().port;
    meta.dst_port = config_.port;
    meta.service = Service::ftp;

    uint64_t sid = sessions_.allocate_session_id();
    AttackEvent event = sink_.record(meta, sid);
    auto session = sessions_.open_session(event, nullptr);
    if (!session) return;

    conn.write_all(std::string(kGreeting) + "\r\n");

    FtpSessionState state;
    std::optional<net::TcpListener> pasv;
    net::LineReader reader(conn, 1024);

    while (!stopping_) {
        std::string line;
        auto st = reader.read_line(&line, config_.idle_timeout_ms);
        if (st != net::LineReader::Status::ok && st != net::LineReader::Status::overlong) break;

        StepOutcome step = ftp_step(state, line);
        std::string logged_reply = step.reply;
        if (step.code == 230)
            session->record_login(state.username, step.arg, LoginAttempt::Outcome::granted);

        switch (step.action) {
        case StepOutcome::Action::none:
            conn.write_all(step.reply + "\r\n");
            break;
        case StepOutcome::Action::quit:
            conn.write_all(step.reply + "\r\n");
            session->record_command(line, step.reply, 0);
            session->close();
            return;
        case StepOutcome::Action::open_pasv: {
            pasv = open_pasv_listener();
            if (!pasv) {
                logged_reply = "425 Can't open data connection.";
                conn.write_all(logged_reply + "\r\n");
                break;
            }
            state.data_channel_ready = true;
            net::Endpoint local = conn.local();
            std::string host = local.ip.family == IpAddr::Family::v4 ? local.ip.to_string()
                                                                     : "127.0.0.1";
            std::replace(host.begin(), host.end(), '.', ',');
            uint16_t port = pasv->local_port();
            char buf[96];
            std::snprintf(buf, sizeof buf, "227 Entering Passive Mode (%s,%u,%u).",
                          host.c_str(), port / 256, port % 256);
            logged_reply = buf;
            conn.write_all(logged_reply + "\r\n");
            break;
        }
        case StepOutcome::Action::list: {
            conn.write_all("150 Here comes the directory listing.\r\n");
            auto data = pasv ? pasv->accept(10'000) : std::nullopt;
            if (data) data->shutdown_send();
            pasv.reset();
            state.data_channel_ready = false;
            logged_reply = "226 Directory send OK.";
            conn.write_all(logged_reply + "\r\n");
            break;
        }
        case StepOutcome::Action::stor: {
            conn.write_all("150 Ok to send data.\r\n");
            auto data = pasv ? pasv->accept(10'000) : std::nullopt;
            std::string payload;
            bool overflow = false;
            if (data) {
                char chunk[8192];
                while (true) {
                    int n = data->read_some(chunk, sizeof chunk, config_.idle_timeout_ms);
                    if (n <= 0) break;
                    if (payload.size() + static_cast<size_t>(n) > config_.max_upload) {
                        overflow = true;
                        break;
                    }
                    payload.append(chunk, static_cast<size_t>(n));
                }
            }
            pasv.reset();
            state.data_channel_ready = false;
            if (!data) {
                logged_reply = "425 Can't open data connection.";
            } else if (overflow) {
                logged_reply = "552 Exceeded storage allocation.";
            } else {
                ArtifactOrigin origin;
                origin.kind = ArtifactOrigin::Kind::ftp_store;
                origin.path = step.arg;
                auto artifact = artifacts_.store(payload, origin, sid, clock_.now_ms());
                session->record_artifact(artifact.digest);
                logged_reply = "226 Transfer complete.";
            }
            conn.write_all(logged_reply + "\r\n");
            break;
        }
        }
        session->record_command(line, logged_reply, 0);
    }
    session->close();
}

} // namespace droidpot::ftp
