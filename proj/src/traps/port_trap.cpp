#include "traps/port_trap.hpp"

#include <unordered_map>

#include <json.hpp>

#include "core/sha256.hpp"

namespace droidpot::porttrap {

const char* to_string(TrapMode m) {
    switch (m) {
    case TrapMode::silent: return "silent";
    case TrapMode::echo: return "echo";
    case TrapMode::banner: return "banner";
    }
    return "silent";
}

PayloadCapture trap_connection_io(net::ByteStream& stream, const PortPolicy& policy,
                                  Clock& clock, int idle_timeout_ms, int max_total_ms,
                                  const std::atomic<bool>* stop) {
    PayloadCapture capture;
    TimestampMs started = clock.now_ms();

    if (policy.mode == TrapMode::banner && !policy.banner.empty())
        stream.write_all(policy.banner);

    int idle = 0;
    char chunk[8192];
    while (true) {
        if (stop && stop->load()) break;
        if (clock.now_ms() - started >= max_total_ms) break;
        int n = stream.read_some(chunk, sizeof chunk, 250);
        if (n == net::ByteStream::kTimeout) {
            idle += 250;
            if (idle >= idle_timeout_ms) break;
            continue;
        }
        if (n <= 0) break;
        idle = 0;
        capture.total_bytes += static_cast<uint64_t>(n);
        size_t room = capture.stored.size() < kCaptureCap ? kCaptureCap - capture.stored.size()
                                                          : 0;
        if (room > 0) capture.stored.append(chunk, std::min(static_cast<size_t>(n), room));
        if (policy.mode == TrapMode::echo)
            stream.write_all(std::string_view(chunk, static_cast<size_t>(n)));
    }
    capture.duration_ms = clock.now_ms() - started;
    capture.blind_send = policy.mode == TrapMode::silent && capture.total_bytes > 0;
    return capture;
}

PortTrap::PortTrap(PortTrapConfig config, EventSink& sink, ArtifactStore& artifacts, Clock& clock,
                   NdjsonLog* capture_log)
    : config_(std::move(config)), sink_(sink), artifacts_(artifacts), clock_(clock),
      capture_log_(capture_log) {}

PortTrap::~PortTrap() { stop(); }

bool PortTrap::start(std::vector<std::string>* failed) {
    stopping_ = false;
    for (const auto& [port, policy] : config_.policy.tcp_ports) {
        auto entry = std::make_unique<TcpEntry>();
        entry->port = port;
        entry->policy = policy;
        std::string error;
        if (!entry->listener.open(config_.bind_addr, port, &error)) {
            if (failed) failed->push_back("tcp/" + std::to_string(port) + ": " + error);
            continue;
        }
        entry->port = entry->listener.local_port();
        tcp_.push_back(std::move(entry));
    }
    for (const auto& [port, policy] : config_.policy.udp_ports) {
        auto entry = std::make_unique<UdpEntry>();
        entry->port = port;
        entry->policy = policy;
        std::string error;
        if (!entry->socket.open(config_.bind_addr, port, &error)) {
            if (failed) failed->push_back("udp/" + std::to_string(port) + ": " + error);
            continue;
        }
        entry->port = entry->socket.local_port();
        udp_.push_back(std::move(entry));
    }
    for (size_t i = 0; i < tcp_.size(); i++)
        threads_.emplace_back([this, i] { tcp_accept_loop(i); });
    for (size_t i = 0; i < udp_.size(); i++)
        threads_.emplace_back([this, i] { udp_serve_loop(i); });
    return !tcp_.empty() || !udp_.empty() ||
           (config_.policy.tcp_ports.empty() && config_.policy.udp_ports.empty());
}

void PortTrap::stop() {
    stopping_ = true;
    for (auto& t : threads_)
        if (t.joinable()) t.join();
    threads_.clear();
    workers_.wait_idle(5'000);
    tcp_.clear();
    udp_.clear();
}

std::vector<uint16_t> PortTrap::bound_tcp_ports() const {
    std::vector<uint16_t> out;
    for (const auto& e : tcp_) out.push_back(e->listener.local_port());
    return out;
}

std::vector<uint16_t> PortTrap::bound_udp_ports() const {
    std::vector<uint16_t> out;
    for (const auto& e : udp_) out.push_back(e->socket.local_port());
    return out;
}

void PortTrap::tcp_accept_loop(size_t idx) {
    TcpEntry& entry = *tcp_[idx];
    while (!stopping_) {
        auto conn = entry.listener.accept(250);
        if (!conn) continue;
        workers_.launch([this, &entry, c = std::make_shared<net::TcpConn>(std::move(*conn))] {
            handle_tcp(*c, entry.port, entry.policy);
        });
    }
}

void PortTrap::handle_tcp(net::TcpConn& conn, uint16_t port, const PortPolicy& policy) {
    ConnMeta meta;
    meta.transport = Transport::tcp;
    meta.src_ip = conn.peer().ip;
    meta.src_port = conn.peer().port;
    meta.dst_port = port;
    meta.service = Service::port_trap;
    AttackEvent event = sink_.record(meta);

    PayloadCapture capture = trap_connection_io(conn, policy, clock_, config_.idle_timeout_ms,
                                                config_.max_total_ms, &stopping_);
    if (capture.total_bytes > 0) {
        ArtifactOrigin origin;
        origin.kind = ArtifactOrigin::Kind::raw_payload;
        artifacts_.store(capture.stored, origin, std::nullopt, clock_.now_ms());
    }
    log_capture(event.event_id, Transport::tcp, conn.peer().to_string(), port, policy.mode,
                capture);
}

void PortTrap::udp_serve_loop(size_t idx) {
    UdpEntry& entry = *udp_[idx];
    UdpFlowTable flow_events(60'000);
    std::unordered_map<FlowKey, UdpFlowState, FlowKeyHash> flows;

    auto flush_idle = [&](bool all) {
        TimestampMs now = clock_.now_ms();
        for (auto it = flows.begin(); it != flows.end();) {
            if (all || now - it->second.last_seen > 60'000) {
                it->second.capture.duration_ms = it->second.last_seen - it->second.first_seen;
                finalize_udp_flow(it->second);
                it = flows.erase(it);
            } else {
                ++it;
            }
        }
    };

    while (!stopping_) {
        auto dgram = entry.socket.recv(250);
        flush_idle(false);
        if (!dgram) continue;
        TimestampMs now = clock_.now_ms();

        FlowKey key{dgram->peer.ip, dgram->peer.port, entry.port};
        bool fresh = flow_events.touch(key, now);
        if (fresh) {
            ConnMeta meta;
            meta.transport = Transport::udp;
            meta.src_ip = dgram->peer.ip;
            meta.src_port = dgram->peer.port;
            meta.dst_port = entry.port;
            meta.service = Service::port_trap;
            meta.payload_bytes = dgram->data.size();
            AttackEvent event = sink_.record(meta);

            UdpFlowState state;
            state.event_id = event.event_id;
            state.first_seen = now;
            state.mode = entry.policy.mode;
            state.dst_port = entry.port;
            state.src = dgram->peer.to_string();
            flows[key] = std::move(state);

            if (entry.policy.mode == TrapMode::banner && !entry.policy.banner.empty())
                entry.socket.send_to(dgram->peer, entry.policy.banner);
        }
        auto& flow = flows[key];
        flow.last_seen = now;
        flow.capture.total_bytes += dgram->data.size();
        size_t room = flow.capture.stored.size() < kCaptureCap
                          ? kCaptureCap - flow.capture.stored.size()
                          : 0;
        if (room > 0) flow.capture.stored.append(dgram->data, 0, std::min(dgram->data.size(), room));
        if (entry.policy.mode == TrapMode::echo) entry.socket.send_to(dgram->peer, dgram->data);
    }
    flush_idle(true);
}

void PortTrap::finalize_udp_flow(const UdpFlowState& flow) {
    PayloadCapture capture = flow.capture;
    capture.blind_send = flow.mode == TrapMode::silent && capture.total_bytes > 0;
    if (capture.total_bytes > 0) {
        ArtifactOrigin origin;
        origin.kind = ArtifactOrigin::Kind::raw_payload;
        artifacts_.store(capture.stored, origin, std::nullopt, clock_.now_ms());
    }
    log_capture(flow.event_id, Transport::udp, flow.src, flow.dst_port, flow.mode, capture);
}

void PortTrap::log_capture(uint64_t event_id, Transport transport, const std::string& src,
                           uint16_t dst_port, TrapMode mode, const PayloadCapture& capture) {
    if (!capture_log_) return;
    nlohmann::ordered_json j;
    j["event"] = event_id;
    j["ts"] = format_rfc3339_ms(clock_.now_ms());
    j["proto"] = droidpot::to_string(transport);
    j["src"] = src;
    j["dst_port"] = dst_port;
    j["mode"] = to_string(mode);
    j["total_bytes"] = capture.total_bytes;
    j["stored_bytes"] = capture.stored.size();
    j["blind_send"] = capture.blind_send;
    j["duration_ms"] = capture.duration_ms;
    if (capture.total_bytes > 0)
        j["digest"] = Sha256::of(capture.stored);
    else
        j["digest"] = nullptr;
    capture_log_->append(j.dump());
}

} // namespace droidpot::porttrap
