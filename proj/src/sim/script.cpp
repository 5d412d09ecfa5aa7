#include "sim/script.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "core/base64.hpp"
#include "core/session.hpp"
#include "net/socket.hpp"

namespace droidpot::sim {

namespace fs = std::filesystem;

std::optional<AttackScript> AttackScript::from_file(const std::string& path, std::string* error) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (error) *error = path + ": cannot open script";
        return std::nullopt;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str(), error);
}

std::optional<AttackScript> AttackScript::from_json(const std::string& text, std::string* error) {
    auto fail = [&](const std::string& msg) -> std::optional<AttackScript> {
        if (error) *error = msg;
        return std::nullopt;
    };
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return fail("script is not a JSON object");

    AttackScript script;
    try {
        script.name = j.value("name", "unnamed");
        if (!j.contains("steps") || !j["steps"].is_array() || j["steps"].empty())
            return fail("script needs a non-empty steps array");
        for (const auto& s : j["steps"]) {
            ScriptStep step;
            std::string op = s.at("op").get<std::string>();
            if (op == "connect") {
                step.op = ScriptStep::Op::connect;
                auto proto = transport_from_string(s.value("transport", "tcp"));
                if (!proto) return fail("bad transport in connect step");
                step.transport = *proto;
                step.port = s.at("port").get<uint16_t>();
            } else if (op == "send") {
                step.op = ScriptStep::Op::send;
                step.data = s.at("line").get<std::string>();
            } else if (op == "send_bytes") {
                step.op = ScriptStep::Op::send_bytes;
                auto bytes = base64_decode(s.at("b64").get<std::string>());
                if (!bytes) return fail("bad base64 in send_bytes step");
                step.data = *bytes;
            } else if (op == "expect") {
                step.op = ScriptStep::Op::expect;
                step.data = s.at("pattern").get<std::string>();
                step.timeout_ms = s.value("timeout_ms", 5000);
            } else if (op == "sleep") {
                step.op = ScriptStep::Op::sleep;
                step.ms = s.at("ms").get<int>();
            } else if (op == "close") {
                step.op = ScriptStep::Op::close;
            } else {
                return fail("unknown step op: " + op);
            }
            script.steps.push_back(std::move(step));
        }
        if (j.contains("expected")) {
            const auto& e = j["expected"];
            script.final_output_contains = e.value("final_output_contains", "");
            if (e.contains("blind_send")) script.capture_blind_send = e["blind_send"].get<bool>();
            if (e.contains("command_count"))
                script.expected_command_count = e["command_count"].get<int>();
            if (e.contains("transcript")) {
                ExpectedTranscript et;
                const auto& t = e["transcript"];
                if (t.contains("logins")) {
                    et.check_logins = true;
                    for (const auto& l : t["logins"])
                        et.logins.push_back({l.at(0).get<std::string>(),
                                             l.at(1).get<std::string>(),
                                             l.at(2).get<std::string>()});
                }
                if (t.contains("commands")) {
                    et.check_commands = true;
                    for (const auto& c : t["commands"])
                        et.commands.push_back({c.at("input").get<std::string>(),
                                               c.at("output").get<std::string>(),
                                               c.at("status").get<int>()});
                }
                if (t.contains("artifacts")) {
                    et.check_artifacts = true;
                    for (const auto& a : t["artifacts"])
                        et.artifacts.push_back(a.get<std::string>());
                }
                script.transcript = std::move(et);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        return fail(std::string("script: ") + e.what());
    }
    return script;
}

namespace {

struct Connection {
    std::optional<net::TcpConn> tcp;
    std::optional<net::UdpSocket> udp;
    net::Endpoint udp_peer;
    std::string local_endpoint; // "ip:port" as the daemon sees it
};

// Looks in the transcript log for the session whose src matches ours.
std::optional<SessionTranscript> find_transcript(const std::string& daemon_dir,
                                                 const std::string& local_endpoint,
                                                 int wait_ms) {
    std::string path = (fs::path(daemon_dir) / "transcripts.ndjson").string();
    for (int waited = 0; waited <= wait_ms; waited += 100) {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            std::string line;
            std::optional<SessionTranscript> found;
            while (std::getline(in, line)) {
                auto t = transcript_from_json(line);
                if (t && t->src_endpoint == local_endpoint) found = t;
            }
            if (found) return found;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    return std::nullopt;
}

std::optional<bool> find_capture_blind_send(const std::string& daemon_dir,
                                            const std::string& local_endpoint, int wait_ms) {
    std::string path = (fs::path(daemon_dir) / "captures.ndjson").string();
    for (int waited = 0; waited <= wait_ms; waited += 100) {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            std::string line;
            std::optional<bool> found;
            while (std::getline(in, line)) {
                nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.is_object()) continue;
                if (j.value("src", "") == local_endpoint && j.contains("blind_send"))
                    found = j["blind_send"].get<bool>();
            }
            if (found) return found;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    return std::nullopt;
}

std::string transcript_diff(const ExpectedTranscript& expected, const SessionTranscript& got) {
    std::ostringstream diff;
    if (expected.check_logins) {
        if (expected.logins.size() != got.login_attempts.size()) {
            diff << "login count: expected " << expected.logins.size() << ", got "
                 << got.login_attempts.size() << "\n";
        } else {
            for (size_t i = 0; i < expected.logins.size(); i++) {
                const auto& e = expected.logins[i];
                const auto& g = got.login_attempts[i];
                if (e[0] != g.username || e[1] != g.password ||
                    e[2] != LoginAttempt::outcome_name(g.outcome))
                    diff << "login[" << i << "]: expected (" << e[0] << "," << e[1] << ","
                         << e[2] << "), got (" << g.username << "," << g.password << ","
                         << LoginAttempt::outcome_name(g.outcome) << ")\n";
            }
        }
    }
    if (expected.check_commands) {
        if (expected.commands.size() != got.commands.size()) {
            diff << "command count: expected " << expected.commands.size() << ", got "
                 << got.commands.size() << "\n";
        } else {
            for (size_t i = 0; i < expected.commands.size(); i++) {
                const auto& e = expected.commands[i];
                const auto& g = got.commands[i];
                if (e.input != g.input)
                    diff << "command[" << i << "].input: expected \"" << e.input
                         << "\", got \"" << g.input << "\"\n";
                if (e.output != g.output)
                    diff << "command[" << i << "].output: expected \"" << e.output
                         << "\", got \"" << g.output << "\"\n";
                if (e.exit_status != g.exit_status)
                    diff << "command[" << i << "].status: expected " << e.exit_status
                         << ", got " << g.exit_status << "\n";
            }
        }
    }
    if (expected.check_artifacts) {
        if (expected.artifacts != got.artifact_digests) {
            diff << "artifacts: expected [";
            for (const auto& a : expected.artifacts) diff << a << " ";
            diff << "], got [";
            for (const auto& a : got.artifact_digests) diff << a << " ";
            diff << "]\n";
        }
    }
    return diff.str();
}

} // namespace

ScriptResult run_script(const AttackScript& script, const std::string& target_host,
                        const std::string& daemon_dir) {
    ScriptResult result;
    Connection conn;
    std::string last_local_endpoint;
    size_t scan_pos = 0; // expects consume the buffer up to their match

    auto fail = [&](const std::string& why) {
        result.pass = false;
        result.failure = why;
        return result;
    };

    for (const auto& step : script.steps) {
        switch (step.op) {
        case ScriptStep::Op::connect: {
            conn = Connection{};
            if (step.transport == Transport::tcp) {
                auto c = net::TcpConn::connect(target_host, step.port, 5'000);
                if (!c) return fail("connect tcp/" + std::to_string(step.port) + " failed");
                conn.tcp = std::move(*c);
                conn.local_endpoint = conn.tcp->local().to_string();
            } else {
                conn.udp.emplace();
                std::string error;
                if (!conn.udp->open(target_host == "127.0.0.1" ? "127.0.0.1" : "0.0.0.0", 0,
                                    &error))
                    return fail("udp socket: " + error);
                auto ip = IpAddr::parse(target_host);
                if (!ip) return fail("bad target host");
                conn.udp_peer = net::Endpoint{*ip, step.port};
                conn.local_endpoint =
                    (target_host == "127.0.0.1" ? "127.0.0.1:" : "0.0.0.0:") +
                    std::to_string(conn.udp->local_port());
            }
            last_local_endpoint = conn.local_endpoint;
            break;
        }
        case ScriptStep::Op::send:
            if (conn.tcp) {
                if (!conn.tcp->write_all(step.data + "\n")) return fail("send failed");
            } else if (conn.udp) {
                if (!conn.udp->send_to(conn.udp_peer, step.data + "\n"))
                    return fail("send failed");
            } else {
                return fail("send before connect");
            }
            break;
        case ScriptStep::Op::send_bytes:
            if (conn.tcp) {
                if (!conn.tcp->write_all(step.data)) return fail("send_bytes failed");
            } else if (conn.udp) {
                if (!conn.udp->send_to(conn.udp_peer, step.data))
                    return fail("send_bytes failed");
            } else {
                return fail("send_bytes before connect");
            }
            break;
        case ScriptStep::Op::expect: {
            bool found = false;
            int waited = 0;
            auto scan = [&] {
                auto pos = result.received.find(step.data, scan_pos);
                if (pos == std::string::npos) return false;
                scan_pos = pos + step.data.size();
                return true;
            };
            while (waited <= step.timeout_ms) {
                if (scan()) {
                    found = true;
                    break;
                }
                if (conn.tcp) {
                    char buf[4096];
                    int n = conn.tcp->read_some(buf, sizeof buf, 200);
                    if (n > 0) {
                        result.received.append(buf, static_cast<size_t>(n));
                        continue;
                    }
                    if (n == 0) {
                        found = scan(); // closed; check accumulated bytes once more
                        break;
                    }
                } else if (conn.udp) {
                    auto d = conn.udp->recv(200);
                    if (d) {
                        result.received += d->data;
                        continue;
                    }
                } else {
                    return fail("expect before connect");
                }
                waited += 200;
            }
            if (!found)
                return fail("expect \"" + step.data + "\" timed out; got tail: " +
                            result.received.substr(
                                result.received.size() > 200 ? result.received.size() - 200 : 0));
            break;
        }
        case ScriptStep::Op::sleep:
            std::this_thread::sleep_for(std::chrono::milliseconds(step.ms));
            break;
        case ScriptStep::Op::close:
            if (conn.tcp) conn.tcp->close();
            conn.udp.reset();
            break;
        }
    }
    if (conn.tcp) conn.tcp->close();

    if (!script.final_output_contains.empty() &&
        result.received.find(script.final_output_contains) == std::string::npos)
        return fail("final output does not contain \"" + script.final_output_contains + "\"");

    if (!daemon_dir.empty()) {
        if (script.transcript || script.expected_command_count) {
            auto transcript = find_transcript(daemon_dir, last_local_endpoint, 10'000);
            if (!transcript) return fail("no transcript found for " + last_local_endpoint);
            if (script.expected_command_count &&
                static_cast<int>(transcript->commands.size()) != *script.expected_command_count)
                return fail("command count: expected " +
                            std::to_string(*script.expected_command_count) + ", got " +
                            std::to_string(transcript->commands.size()));
            if (script.transcript) {
                result.diff = transcript_diff(*script.transcript, *transcript);
                if (!result.diff.empty()) return fail("transcript differs from fixture");
            }
        }
        if (script.capture_blind_send) {
            auto blind = find_capture_blind_send(daemon_dir, last_local_endpoint, 10'000);
            if (!blind) return fail("no capture record found for " + last_local_endpoint);
            if (*blind != *script.capture_blind_send)
                return fail(std::string("blind_send: expected ") +
                            (*script.capture_blind_send ? "true" : "false") + ", got " +
                            (*blind ? "true" : "false"));
        }
    }

    result.pass = true;
    return result;
}

} // namespace droidpot::sim
