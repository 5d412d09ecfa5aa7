#include "core/session.hpp"

#include <fstream>
#include <vector>

#include <json.hpp>

namespace droidpot {

void SessionHandle::record_login(const std::string& user, const std::string& password,
                                 LoginAttempt::Outcome outcome) {
    std::lock_guard<std::mutex> lock(mu_);
    if (closed_) return;
    transcript_.login_attempts.push_back({user, password, outcome});
}

void SessionHandle::record_command(const std::string& input, const std::string& output,
                                   int exit_status) {
    std::lock_guard<std::mutex> lock(mu_);
    if (closed_) return;
    transcript_.commands.push_back({input, output, exit_status});
}

void SessionHandle::record_artifact(const std::string& digest) {
    std::lock_guard<std::mutex> lock(mu_);
    if (closed_) return;
    transcript_.artifact_digests.push_back(digest);
}

void SessionHandle::close() {
    SessionTranscript snapshot;
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (closed_) return;
        closed_ = true;
        snapshot = transcript_;
    }
    owner_->finalize(snapshot.session_id, snapshot);
}

bool SessionHandle::closed() const {
    std::lock_guard<std::mutex> lock(mu_);
    return closed_;
}

bool SessionRegistry::open_log(const std::string& path, std::string* error) {
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream probe(path, std::ios::app);
    if (!probe) {
        if (error) *error = path + ": cannot open transcript log";
        return false;
    }
    log_path_ = path;
    return true;
}

uint64_t SessionRegistry::allocate_session_id() {
    std::lock_guard<std::mutex> lock(mu_);
    return next_session_id_++;
}

std::shared_ptr<SessionHandle> SessionRegistry::open_session(const AttackEvent& event,
                                                             std::string* error) {
    if (event.service != Service::shell && event.service != Service::web &&
        event.service != Service::ftp) {
        if (error) *error = std::string("sessionless service: ") + to_string(event.service);
        return nullptr;
    }
    std::lock_guard<std::mutex> lock(mu_);
    uint64_t sid;
    if (event.session_id) {
        sid = *event.session_id;
        if (open_.count(sid) || closed_.count(sid)) {
            if (error) *error = "session id already in use: " + std::to_string(sid);
            return nullptr;
        }
        if (sid >= next_session_id_) next_session_id_ = sid + 1;
    } else {
        sid = next_session_id_++;
    }
    SessionTranscript t;
    t.session_id = sid;
    t.start = event.timestamp;
    t.end = 0;
    t.src_endpoint = event.src_ip.to_string() + ":" + std::to_string(event.src_port);
    t.service = event.service;
    auto handle = std::shared_ptr<SessionHandle>(new SessionHandle(this, std::move(t)));
    open_[sid] = handle;
    return handle;
}

void SessionRegistry::finalize(uint64_t session_id, const SessionTranscript& t) {
    std::lock_guard<std::mutex> lock(mu_);
    SessionTranscript done = t;
    done.end = clock_.now_ms();
    open_.erase(session_id);
    closed_[session_id] = done;
    if (!log_path_.empty()) {
        std::ofstream out(log_path_, std::ios::app | std::ios::binary);
        out << transcript_to_json(done) << "\n";
    }
}

std::optional<SessionTranscript> SessionRegistry::transcript(uint64_t session_id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = closed_.find(session_id);
    if (it == closed_.end()) return std::nullopt;
    return it->second;
}

void SessionRegistry::close_all() {
    std::vector<std::shared_ptr<SessionHandle>> to_close;
    {
        std::lock_guard<std::mutex> lock(mu_);
        for (auto& [_, handle] : open_) to_close.push_back(handle);
    }
    for (auto& handle : to_close) handle->close();
}

size_t SessionRegistry::open_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return open_.size();
}

size_t SessionRegistry::closed_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return closed_.size();
}

std::string transcript_to_json(const SessionTranscript& t) {
    nlohmann::ordered_json j;
    j["session"] = t.session_id;
    j["service"] = to_string(t.service);
    j["start"] = format_rfc3339_ms(t.start);
    j["end"] = format_rfc3339_ms(t.end);
    j["src"] = t.src_endpoint;
    auto logins = nlohmann::ordered_json::array();
    for (const auto& a : t.login_attempts)
        logins.push_back({{"user", a.username},
                          {"password", a.password},
                          {"outcome", LoginAttempt::outcome_name(a.outcome)}});
    j["logins"] = logins;
    auto commands = nlohmann::ordered_json::array();
    for (const auto& c : t.commands)
        commands.push_back({{"input", c.input}, {"output", c.output}, {"status", c.exit_status}});
    j["commands"] = commands;
    j["artifacts"] = t.artifact_digests;
    return j.dump();
}

std::optional<SessionTranscript> transcript_from_json(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    SessionTranscript t;
    try {
        t.session_id = j.at("session").get<uint64_t>();
        auto service = service_from_string(j.at("service").get<std::string>());
        if (!service) return std::nullopt;
        t.service = *service;
        auto start = parse_rfc3339_ms(j.at("start").get<std::string>());
        auto end = parse_rfc3339_ms(j.at("end").get<std::string>());
        if (!start || !end) return std::nullopt;
        t.start = *start;
        t.end = *end;
        t.src_endpoint = j.at("src").get<std::string>();
        for (const auto& a : j.at("logins")) {
            LoginAttempt la;
            la.username = a.at("user").get<std::string>();
            la.password = a.at("password").get<std::string>();
            std::string outcome = a.at("outcome").get<std::string>();
            if (outcome == "granted")
                la.outcome = LoginAttempt::Outcome::granted;
            else if (outcome == "granted_by_attempt_quota")
                la.outcome = LoginAttempt::Outcome::granted_by_attempt_quota;
            else
                la.outcome = LoginAttempt::Outcome::rejected;
            t.login_attempts.push_back(std::move(la));
        }
        for (const auto& c : j.at("commands"))
            t.commands.push_back({c.at("input").get<std::string>(),
                                  c.at("output").get<std::string>(),
                                  c.at("status").get<int>()});
        for (const auto& d : j.at("artifacts")) t.artifact_digests.push_back(d.get<std::string>());
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
    return t;
}

} // namespace droidpot
