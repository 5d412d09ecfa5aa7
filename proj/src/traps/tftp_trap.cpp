#include "traps/tftp_trap.hpp"

#include <algorithm>

namespace droidpot::tftp {

namespace {

uint16_t read_u16(const std::string& d, size_t off) {
    return static_cast<uint16_t>((static_cast<uint8_t>(d[off]) << 8) |
                                 static_cast<uint8_t>(d[off + 1]));
}

void put_u16(std::string* out, uint16_t v) {
    out->push_back(static_cast<char>(v >> 8));
    out->push_back(static_cast<char>(v & 0xFF));
}

// Parses "filename\0mode\0" after the opcode.
bool parse_request(const std::string& d, std::string* filename, std::string* mode) {
    size_t name_end = d.find('\0', 2);
    if (name_end == std::string::npos) return false;
    size_t mode_end = d.find('\0', name_end + 1);
    if (mode_end == std::string::npos) return false;
    *filename = d.substr(2, name_end - 2);
    *mode = d.substr(name_end + 1, mode_end - name_end - 1);
    std::transform(mode->begin(), mode->end(), mode->begin(),
                   [](unsigned char c) { return static_cast<char>(::tolower(c)); });
    return true;
}

} // namespace

std::string make_error(uint16_t code, const std::string& message) {
    std::string out;
    put_u16(&out, kError);
    put_u16(&out, code);
    out += message;
    out.push_back('\0');
    return out;
}

std::string make_ack(uint16_t block) {
    std::string out;
    put_u16(&out, kAck);
    put_u16(&out, block);
    return out;
}

Transfer* TransferTable::find(const std::string& peer_key) {
    auto it = transfers_.find(peer_key);
    return it == transfers_.end() ? nullptr : &it->second;
}

Transfer* TransferTable::insert(const std::string& peer_key, Transfer t) {
    return &(transfers_[peer_key] = std::move(t));
}

void TransferTable::erase(const std::string& peer_key) { transfers_.erase(peer_key); }

void TransferTable::sweep(TimestampMs now) {
    for (auto it = transfers_.begin(); it != transfers_.end();) {
        if (now - it->second.last_activity > idle_ms_)
            it = transfers_.erase(it);
        else
            ++it;
    }
}

std::optional<std::string> tftp_handle(const std::string& datagram, TransferTable& table,
                                       const std::string& peer_key, TimestampMs now,
                                       std::optional<Transfer>* completed) {
    if (completed) completed->reset();
    if (datagram.size() < 4) return make_error(4, "Illegal TFTP operation");

    uint16_t opcode = read_u16(datagram, 0);
    switch (opcode) {
    case kRrq: {
        std::string filename, mode;
        if (!parse_request(datagram, &filename, &mode))
            return make_error(4, "Illegal TFTP operation");
        return make_error(1, "File not found");
    }
    case kWrq: {
        std::string filename, mode;
        if (!parse_request(datagram, &filename, &mode))
            return make_error(4, "Illegal TFTP operation");
        if (mode != "octet" && mode != "netascii")
            return make_error(4, "Illegal TFTP operation");
        Transfer t;
        t.filename = filename;
        t.mode = mode;
        t.last_activity = now;
        table.insert(peer_key, std::move(t));
        return make_ack(0);
    }
    case kData: {
        Transfer* t = table.find(peer_key);
        if (!t) return make_error(5, "Unknown transfer ID");
        t->last_activity = now;
        uint16_t block = read_u16(datagram, 2);
        std::string payload = datagram.substr(4);
        if (block == static_cast<uint16_t>(t->last_block + 1)) {
            if (t->data.size() + payload.size() > kMaxTransferBytes) {
                table.erase(peer_key);
                return make_error(3, "Disk full or allocation exceeded");
            }
            t->data += payload;
            t->last_block = block;
            std::string ack = make_ack(block);
            if (payload.size() < kBlockSize) {
                if (completed) *completed = std::move(*t);
                table.erase(peer_key);
            }
            return ack;
        }
        // Out of order: re-acknowledge the last in-order block.
        return make_ack(t->last_block);
    }
    case kAck:
    case kError:
        return std::nullopt;
    default:
        return make_error(4, "Illegal TFTP operation");
    }
}

TftpTrap::TftpTrap(TftpTrapConfig config, EventSink& sink, ArtifactStore& artifacts, Clock& clock)
    : config_(std::move(config)), sink_(sink), artifacts_(artifacts), clock_(clock) {}

TftpTrap::~TftpTrap() { stop(); }

bool TftpTrap::start(std::string* error) {
    if (!socket_.open(config_.bind_addr, config_.port, error)) return false;
    stopping_ = false;
    thread_ = std::thread([this] { serve_loop(); });
    return true;
}

void TftpTrap::stop() {
    stopping_ = true;
    if (thread_.joinable()) thread_.join();
    socket_.close();
}

void TftpTrap::serve_loop() {
    while (!stopping_) {
        auto dgram = socket_.recv(250);
        TimestampMs now = clock_.now_ms();
        transfers_.sweep(now);
        flows_.sweep(now);
        if (!dgram) continue;

        FlowKey key{dgram->peer.ip, dgram->peer.port, config_.port};
        if (flows_.touch(key, now)) {
            ConnMeta meta;
            meta.transport = Transport::udp;
            meta.src_ip = dgram->peer.ip;
            meta.src_port = dgram->peer.port;
            meta.dst_port = config_.port;
            meta.service = Service::tftp;
            meta.payload_bytes = dgram->data.size();
            sink_.record(meta);
        }

        std::string peer_key = dgram->peer.to_string();
        std::optional<Transfer> completed;
        auto reply = tftp_handle(dgram->data, transfers_, peer_key, now, &completed);
        if (completed) {
            ArtifactOrigin origin;
            origin.kind = ArtifactOrigin::Kind::tftp_write;
            origin.filename = completed->filename;
            artifacts_.store(completed->data, origin, std::nullopt, now);
        }
        if (reply) socket_.send_to(dgram->peer, *reply);
    }
}

} // namespace droidpot::tftp
